//! Balanced bipartitions minimizing the two distribution costs.
//!
//! * [`Objective::EdgeCut`] (Solution A): total weight of edges whose end
//!   points lie on different sides.
//! * [`Objective::VertexBoundary`] (Solution B): total weight of vertices
//!   with at least one neighbor on the other side.
//!
//! A bipartition is feasible when both sides are non-empty and the side
//! sizes differ by at most `floor(epsilon * n)`.

mod exact;
mod heuristic;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bgp::TraceStats;
use crate::topology::{Graph, NodeId, VertexSet};

pub use exact::{exact_bipartition, ExactSolution, DEFAULT_EXACT_LIMIT};
pub use heuristic::{heuristic_bipartition, HeuristicOptions};

pub const DEFAULT_EPSILON: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error("{n} nodes exceed the exact solver limit of {limit}; use the heuristic")]
    TooLarge { n: usize, limit: usize },
    #[error("no bipartition of {n} nodes satisfies epsilon = {epsilon}")]
    Infeasible { n: usize, epsilon: f64 },
    #[error("inconsistent input: {0}")]
    Consistency(String),
    #[error("invalid bipartition: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Objective {
    /// Weighted edge cut (Solution A).
    #[serde(rename = "A")]
    EdgeCut,
    /// Weighted vertex boundary (Solution B).
    #[serde(rename = "B")]
    VertexBoundary,
}

impl Objective {
    pub fn label(self) -> &'static str {
        match self {
            Objective::EdgeCut => "A",
            Objective::VertexBoundary => "B",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeWeight {
    pub u: NodeId,
    pub v: NodeId,
    pub w: u64,
}

/// Edge weights `W_uv` (sorted by `(u, v)` with `u < v`) and vertex weights `W_v`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub edges: Vec<EdgeWeight>,
    pub vertices: Vec<u64>,
}

impl WeightSpec {
    pub fn uniform(graph: &Graph, edge_w: u64, vertex_w: u64) -> Self {
        Self {
            edges: graph.edges().map(|(u, v)| EdgeWeight { u, v, w: edge_w }).collect(),
            vertices: vec![vertex_w; graph.node_count()],
        }
    }

    pub fn edge_weight(&self, u: NodeId, v: NodeId) -> Option<u64> {
        let key = (u.min(v), u.max(v));
        let i = self.edges.binary_search_by(|e| (e.u, e.v).cmp(&key)).ok()?;
        Some(self.edges[i].w)
    }

    /// Checks that the weights cover exactly the edges and vertices of `graph`.
    pub fn validate(&self, graph: &Graph) -> Result<(), PartitionError> {
        if self.vertices.len() != graph.node_count() {
            return Err(PartitionError::Consistency(format!(
                "{} vertex weights for {} nodes",
                self.vertices.len(),
                graph.node_count()
            )));
        }
        if self.edges.len() != graph.edge_count()
            || !self.edges.iter().zip(graph.edges()).all(|(e, (u, v))| (e.u, e.v) == (u, v))
        {
            return Err(PartitionError::Consistency("edge weights do not match the graph edges".into()));
        }
        Ok(())
    }

    pub fn scaled(&self, c: u64) -> Self {
        Self {
            edges: self.edges.iter().map(|e| EdgeWeight { w: e.w * c, ..*e }).collect(),
            vertices: self.vertices.iter().map(|w| w * c).collect(),
        }
    }

    /// Edge weights aligned with each node's adjacency list.
    pub(crate) fn adjacency_weights(&self, graph: &Graph) -> Vec<Vec<u64>> {
        graph.nodes().map(|u| graph.neighbors(u).iter().map(|&v| self.edge_weight(u, v).unwrap()).collect()).collect()
    }
}

/// Weights measured from a simulation trace: `W_uv` is the number of
/// entries sent over `uv` in both directions, `W_v` is `|ME(v)|`.
pub fn weights_from_trace(trace: &TraceStats, graph: &Graph) -> Result<WeightSpec, PartitionError> {
    if trace.me.len() != graph.node_count() {
        return Err(PartitionError::Consistency(format!(
            "trace covers {} nodes, graph has {}",
            trace.me.len(),
            graph.node_count()
        )));
    }
    if trace.edges.len() != 2 * graph.edge_count() || trace.edges.iter().any(|e| !graph.has_edge(e.from, e.to)) {
        return Err(PartitionError::Consistency("trace edges do not match the graph".into()));
    }
    let edges = graph
        .edges()
        .map(|(u, v)| EdgeWeight { u, v, w: trace.edge_entries(u, v) + trace.edge_entries(v, u) })
        .collect();
    Ok(WeightSpec { edges, vertices: trace.me.clone() })
}

/// Side assignment (0 or 1) for every node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bipartition {
    pub side: Vec<u8>,
    pub epsilon: f64,
}

/// Largest allowed size difference between the two sides.
pub fn max_imbalance(n: usize, epsilon: f64) -> usize {
    (epsilon * n as f64 + 1e-9).floor().max(0.0) as usize
}

impl Bipartition {
    pub fn new(side: Vec<u8>, epsilon: f64) -> Self {
        Self { side, epsilon }
    }

    pub fn node_count(&self) -> usize {
        self.side.len()
    }

    pub fn side_of(&self, v: NodeId) -> u8 {
        self.side[v as usize]
    }

    pub fn sizes(&self) -> [usize; 2] {
        let ones = self.side.iter().filter(|&&s| s == 1).count();
        [self.side.len() - ones, ones]
    }

    pub fn block(&self, s: u8) -> VertexSet {
        VertexSet::from_mask(self.side.iter().map(|&x| x == s).collect())
    }

    pub fn swapped(&self) -> Self {
        Self { side: self.side.iter().map(|s| 1 - s).collect(), epsilon: self.epsilon }
    }

    pub fn is_balanced(&self) -> bool {
        let [a, b] = self.sizes();
        a > 0 && b > 0 && a.abs_diff(b) <= max_imbalance(self.side.len(), self.epsilon)
    }

    /// Checks the node count, side labels and balance.
    pub fn validate(&self, graph: &Graph) -> Result<(), PartitionError> {
        if self.side.len() != graph.node_count() {
            return Err(PartitionError::Consistency(format!(
                "partition covers {} nodes, graph has {}",
                self.side.len(),
                graph.node_count()
            )));
        }
        if self.side.iter().any(|&s| s > 1) {
            return Err(PartitionError::Invalid("side labels must be 0 or 1".into()));
        }
        if !self.is_balanced() {
            return Err(PartitionError::Invalid(format!(
                "sizes {:?} violate epsilon = {}",
                self.sizes(),
                self.epsilon
            )));
        }
        Ok(())
    }

    pub fn is_cut(&self, u: NodeId, v: NodeId) -> bool {
        self.side[u as usize] != self.side[v as usize]
    }

    /// Vertices with at least one neighbor on the other side.
    pub fn boundary<'a>(&'a self, graph: &'a Graph) -> impl Iterator<Item = NodeId> + 'a {
        graph.nodes().filter(move |&v| graph.neighbors(v).iter().any(|&w| self.is_cut(v, w)))
    }
}

/// Solution A cost: weight of the edges crossing the cut.
pub fn objective_a(graph: &Graph, weights: &WeightSpec, part: &Bipartition) -> u64 {
    graph.edges().zip(&weights.edges).filter(|((u, v), _)| part.is_cut(*u, *v)).map(|(_, e)| e.w).sum()
}

/// Solution B cost: weight of the vertices adjacent to the other side.
pub fn objective_b(graph: &Graph, weights: &WeightSpec, part: &Bipartition) -> u64 {
    part.boundary(graph).map(|v| weights.vertices[v as usize]).sum()
}

pub fn objective(graph: &Graph, weights: &WeightSpec, part: &Bipartition, objective: Objective) -> u64 {
    match objective {
        Objective::EdgeCut => objective_a(graph, weights, part),
        Objective::VertexBoundary => objective_b(graph, weights, part),
    }
}
