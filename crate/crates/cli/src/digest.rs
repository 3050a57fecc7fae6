use bgpdist_core::topology::Graph;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Content digest of a graph: node count and sorted edge list, independent
/// of file comments and formatting.
pub fn graph_digest(graph: &Graph) -> String {
    let mut h = Sha256::new();
    h.update(format!("{}\n", graph.node_count()));
    for (u, v) in graph.edges() {
        h.update(format!("{u} {v}\n"));
    }
    hex::encode(h.finalize())
}
