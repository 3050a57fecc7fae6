pub mod analysis;
pub mod bgp;
pub mod partition;
pub mod sim;
pub mod topology;
