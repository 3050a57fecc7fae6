use serde::{Deserialize, Serialize};

use super::{max_imbalance, Bipartition, Objective, PartitionError, WeightSpec};
use crate::topology::Graph;

pub const DEFAULT_EXACT_LIMIT: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactSolution {
    pub partition: Bipartition,
    pub cost: u64,
    /// Optimum with the balance constraint dropped (both sides still non-empty).
    pub unconstrained_cost: u64,
}

/// Depth-first branch and bound over side vectors in lexicographic order.
///
/// Vertices are assigned in id order with node 0 pinned to side 0 (both
/// objectives are invariant under relabeling, and the pinned vector is the
/// lexicographically smaller of each complementary pair). The partial cost
/// only grows as vertices are assigned, so it is a valid lower bound. Only
/// strict improvements replace the incumbent, which makes the returned
/// optimum the lexicographically smallest one.
struct Search<'a> {
    graph: &'a Graph,
    adj_w: Vec<Vec<u64>>,
    vertex_w: &'a [u64],
    objective: Objective,
    max_side: usize,
    side: Vec<u8>,
    sizes: [usize; 2],
    /// Assigned neighbors on the opposite side, per vertex.
    foreign: Vec<u32>,
    best: Option<(u64, Vec<u8>)>,
}

impl Search<'_> {
    fn assign(&mut self, v: usize, s: u8) -> u64 {
        self.side[v] = s;
        self.sizes[s as usize] += 1;
        let mut added = 0;
        for (k, &w) in self.graph.neighbors(v as u32).iter().enumerate() {
            let w = w as usize;
            if w >= v || self.side[w] == s {
                continue;
            }
            match self.objective {
                Objective::EdgeCut => added += self.adj_w[v][k],
                Objective::VertexBoundary => {
                    if self.foreign[w] == 0 {
                        added += self.vertex_w[w];
                    }
                    if self.foreign[v] == 0 {
                        added += self.vertex_w[v];
                    }
                }
            }
            self.foreign[w] += 1;
            self.foreign[v] += 1;
        }
        added
    }

    fn unassign(&mut self, v: usize) {
        let s = self.side[v];
        self.sizes[s as usize] -= 1;
        for &w in self.graph.neighbors(v as u32) {
            let w = w as usize;
            if w < v && self.side[w] != s {
                self.foreign[w] -= 1;
                self.foreign[v] -= 1;
            }
        }
        self.side[v] = u8::MAX;
    }

    fn descend(&mut self, v: usize, cost: u64) {
        if self.best.as_ref().is_some_and(|(b, _)| cost >= *b) {
            return;
        }
        let n = self.side.len();
        if v == n {
            if self.sizes[0] > 0 && self.sizes[1] > 0 {
                self.best = Some((cost, self.side.clone()));
            }
            return;
        }
        for s in [0u8, 1] {
            if v == 0 && s == 1 {
                break;
            }
            if self.sizes[s as usize] + 1 > self.max_side {
                continue;
            }
            let added = self.assign(v, s);
            self.descend(v + 1, cost + added);
            self.unassign(v);
        }
    }
}

fn search(graph: &Graph, weights: &WeightSpec, objective: Objective, max_diff: usize) -> Option<(u64, Vec<u8>)> {
    let n = graph.node_count();
    let mut s = Search {
        graph,
        adj_w: weights.adjacency_weights(graph),
        vertex_w: &weights.vertices,
        objective,
        max_side: (n + max_diff) / 2,
        side: vec![u8::MAX; n],
        sizes: [0, 0],
        foreign: vec![0; n],
        best: None,
    };
    s.descend(0, 0);
    s.best
}

/// Globally optimal balanced bipartition for graphs of at most `limit` nodes.
pub fn exact_bipartition(
    graph: &Graph,
    weights: &WeightSpec,
    objective: Objective,
    epsilon: f64,
    limit: usize,
) -> Result<ExactSolution, PartitionError> {
    let n = graph.node_count();
    if n > limit {
        return Err(PartitionError::TooLarge { n, limit });
    }
    weights.validate(graph)?;
    let infeasible = PartitionError::Infeasible { n, epsilon };
    if n < 2 {
        return Err(infeasible);
    }
    let (cost, side) = search(graph, weights, objective, max_imbalance(n, epsilon)).ok_or(infeasible)?;
    let (unconstrained_cost, _) = search(graph, weights, objective, n).expect("n >= 2 always splits");
    Ok(ExactSolution { partition: Bipartition::new(side, epsilon), cost, unconstrained_cost })
}
