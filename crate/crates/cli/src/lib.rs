//! Command-line pipeline around `bgpdist-core`: topology generation, BGP
//! simulation, bipartitioning and overhead analysis, one file per stage.

pub mod artifact;
pub mod cli;
pub mod commands;
pub mod config;
pub mod digest;
pub mod error;
