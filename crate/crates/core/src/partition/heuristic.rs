//! Multi-start move-based local search.
//!
//! Each restart builds a balanced starting split (grown breadth-first from a
//! random vertex on even restarts, shuffled on odd ones) and improves it
//! with Fiduccia-Mattheyses passes: the best-gain unlocked vertex moves and
//! is locked, the side sizes may overshoot the balance bound by one vertex
//! so that consecutive moves act as swaps, and the pass is rolled back to
//! its best feasible prefix. A pairwise swap descent over boundary
//! vertices finishes each restart.

use std::collections::{BinaryHeap, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{max_imbalance, objective, Bipartition, Objective, PartitionError, WeightSpec};
use crate::topology::{Graph, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeuristicOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Upper bound on FM passes per restart.
    pub max_passes: usize,
}

impl Default for HeuristicOptions {
    fn default() -> Self {
        Self { restarts: 16, seed: 0, max_passes: 20 }
    }
}

/// Swap descent is quadratic in the boundary size; skip it beyond this.
const SWAP_BOUNDARY_LIMIT: usize = 400;

struct State<'a> {
    graph: &'a Graph,
    adj_w: &'a [Vec<u64>],
    vertex_w: &'a [u64],
    objective: Objective,
    side: Vec<u8>,
    sizes: [usize; 2],
    /// Neighbors on the other side.
    foreign: Vec<u32>,
    /// Edge weight to the other side and to the own side.
    ext_w: Vec<i64>,
    int_w: Vec<i64>,
    cost: i64,
}

impl<'a> State<'a> {
    fn new(graph: &'a Graph, adj_w: &'a [Vec<u64>], vertex_w: &'a [u64], objective: Objective, side: Vec<u8>) -> Self {
        let n = graph.node_count();
        let mut s = Self {
            graph,
            adj_w,
            vertex_w,
            objective,
            side,
            sizes: [0, 0],
            foreign: vec![0; n],
            ext_w: vec![0; n],
            int_w: vec![0; n],
            cost: 0,
        };
        for (v, row) in adj_w.iter().enumerate() {
            s.sizes[s.side[v] as usize] += 1;
            for (&u, &w) in graph.neighbors(v as NodeId).iter().zip(row) {
                let w = w as i64;
                if s.side[u as usize] != s.side[v] {
                    s.foreign[v] += 1;
                    s.ext_w[v] += w;
                } else {
                    s.int_w[v] += w;
                }
            }
        }
        s.cost = match objective {
            Objective::EdgeCut => s.ext_w.iter().sum::<i64>() / 2,
            Objective::VertexBoundary => (0..n).filter(|&v| s.foreign[v] > 0).map(|v| vertex_w[v] as i64).sum(),
        };
        s
    }

    /// Cost decrease if `v` switched sides.
    fn gain(&self, v: usize) -> i64 {
        match self.objective {
            Objective::EdgeCut => self.ext_w[v] - self.int_w[v],
            Objective::VertexBoundary => {
                let deg = self.graph.degree(v as NodeId) as u32;
                let mut g = 0;
                let was = self.foreign[v] > 0;
                let now = deg - self.foreign[v] > 0;
                g += self.vertex_w[v] as i64 * (was as i64 - now as i64);
                for &u in self.graph.neighbors(v as NodeId) {
                    let u = u as usize;
                    let f = self.foreign[u];
                    let after = if self.side[u] == self.side[v] { f + 1 } else { f - 1 };
                    g += self.vertex_w[u] as i64 * ((f > 0) as i64 - (after > 0) as i64);
                }
                g
            }
        }
    }

    fn flip(&mut self, v: usize) {
        let from = self.side[v];
        self.cost -= self.gain(v);
        for (k, &u) in self.graph.neighbors(v as NodeId).iter().enumerate() {
            let u = u as usize;
            let w = self.adj_w[v][k] as i64;
            if self.side[u] == from {
                self.foreign[u] += 1;
                self.ext_w[u] += w;
                self.int_w[u] -= w;
            } else {
                self.foreign[u] -= 1;
                self.ext_w[u] -= w;
                self.int_w[u] += w;
            }
        }
        self.foreign[v] = self.graph.degree(v as NodeId) as u32 - self.foreign[v];
        std::mem::swap(&mut self.ext_w[v], &mut self.int_w[v]);
        self.side[v] = 1 - from;
        self.sizes[from as usize] -= 1;
        self.sizes[1 - from as usize] += 1;
    }

    /// Vertices whose gain may change when `v` flips.
    fn affected(&self, v: usize, out: &mut Vec<usize>, mark: &mut [bool]) {
        out.clear();
        let mut push = |x: usize, out: &mut Vec<usize>| {
            if !mark[x] {
                mark[x] = true;
                out.push(x);
            }
        };
        push(v, out);
        for &u in self.graph.neighbors(v as NodeId) {
            push(u as usize, out);
            if self.objective == Objective::VertexBoundary {
                for &x in self.graph.neighbors(u) {
                    push(x as usize, out);
                }
            }
        }
        for &x in out.iter() {
            mark[x] = false;
        }
    }
}

struct Bounds {
    max_side: usize,
    slack_side: usize,
}

impl Bounds {
    fn feasible(&self, sizes: [usize; 2]) -> bool {
        sizes[0] > 0 && sizes[1] > 0 && sizes[0].max(sizes[1]) <= self.max_side
    }

    fn can_move(&self, sizes: [usize; 2], from: u8) -> bool {
        sizes[from as usize] > 1 && sizes[1 - from as usize] < self.slack_side
    }
}

fn fm_pass(state: &mut State, bounds: &Bounds, stall_limit: usize) -> bool {
    let n = state.side.len();
    let mut locked = vec![false; n];
    let mut version = vec![0u32; n];
    let mut heaps: [BinaryHeap<(i64, std::cmp::Reverse<usize>, u32)>; 2] = [BinaryHeap::new(), BinaryHeap::new()];
    for v in 0..n {
        heaps[state.side[v] as usize].push((state.gain(v), std::cmp::Reverse(v), 0));
    }

    let start_cost = state.cost;
    let mut best_cost = state.cost;
    let mut best_len = 0;
    let mut moves = Vec::new();
    let mut scratch = Vec::new();
    let mut mark = vec![false; n];

    loop {
        let mut candidate = None;
        for from in [0u8, 1] {
            if !bounds.can_move(state.sizes, from) {
                continue;
            }
            let heap = &mut heaps[from as usize];
            while let Some(&(g, std::cmp::Reverse(v), ver)) = heap.peek() {
                if locked[v] || ver != version[v] || state.side[v] != from {
                    heap.pop();
                    continue;
                }
                if candidate.is_none_or(|(bg, bv)| (g, std::cmp::Reverse(v)) > (bg, std::cmp::Reverse(bv))) {
                    candidate = Some((g, v));
                }
                break;
            }
        }
        let Some((_, v)) = candidate else { break };
        heaps[state.side[v] as usize].pop();
        state.flip(v);
        locked[v] = true;
        moves.push(v);

        state.affected(v, &mut scratch, &mut mark);
        for &x in &scratch {
            if !locked[x] {
                version[x] += 1;
                heaps[state.side[x] as usize].push((state.gain(x), std::cmp::Reverse(x), version[x]));
            }
        }

        if bounds.feasible(state.sizes) && state.cost < best_cost {
            best_cost = state.cost;
            best_len = moves.len();
        }
        if moves.len() - best_len > stall_limit {
            break;
        }
    }
    for &v in moves[best_len..].iter().rev() {
        state.flip(v);
    }
    debug_assert_eq!(state.cost, best_cost);
    best_cost < start_cost
}

/// First-improvement descent over swaps of two boundary vertices on
/// opposite sides. Keeps side sizes unchanged.
fn swap_descent(state: &mut State) {
    loop {
        let boundary: Vec<usize> = (0..state.side.len()).filter(|&v| state.foreign[v] > 0).collect();
        if boundary.len() > SWAP_BOUNDARY_LIMIT {
            return;
        }
        let mut improved = false;
        'outer: for &a in &boundary {
            for &b in &boundary {
                if state.side[a] != 0 || state.side[b] != 1 {
                    continue;
                }
                let before = state.cost;
                state.flip(a);
                state.flip(b);
                if state.cost < before {
                    improved = true;
                    break 'outer;
                }
                state.flip(b);
                state.flip(a);
            }
        }
        if !improved {
            return;
        }
    }
}

fn initial_split(graph: &Graph, restart: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let n = graph.node_count();
    let target = n / 2;
    let mut side = vec![1u8; n];
    if restart.is_multiple_of(2) {
        // Grow side 0 breadth-first from a random vertex, jumping to a
        // random unvisited vertex if the component runs out.
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut seen = vec![false; n];
        let mut queue = VecDeque::new();
        let mut taken = 0;
        let mut next_root = order.into_iter();
        while taken < target {
            let v = match queue.pop_front() {
                Some(v) => v,
                None => {
                    let root = next_root.find(|&r| !seen[r]).expect("fewer than n vertices taken");
                    seen[root] = true;
                    root
                }
            };
            side[v] = 0;
            taken += 1;
            for &u in graph.neighbors(v as NodeId) {
                if !seen[u as usize] {
                    seen[u as usize] = true;
                    queue.push_back(u as usize);
                }
            }
        }
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        for &v in &order[..target] {
            side[v] = 0;
        }
    }
    side
}

fn run_restart(
    graph: &Graph,
    adj_w: &[Vec<u64>],
    weights: &WeightSpec,
    obj: Objective,
    bounds: &Bounds,
    opts: &HeuristicOptions,
    restart: usize,
) -> (u64, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(restart as u64);
    let side = initial_split(graph, restart, &mut rng);
    let mut state = State::new(graph, adj_w, &weights.vertices, obj, side);
    let stall_limit = 50 + graph.node_count() / 20 + rng.gen_range(0..10);
    for _ in 0..opts.max_passes {
        if !fm_pass(&mut state, bounds, stall_limit) {
            break;
        }
    }
    swap_descent(&mut state);
    (state.cost as u64, state.side)
}

/// Best balanced bipartition found over `opts.restarts` independent local
/// searches. Restarts run in parallel; the winner is the lowest cost, ties
/// going to the lowest restart index, so the result depends only on the seed.
pub fn heuristic_bipartition(
    graph: &Graph,
    weights: &WeightSpec,
    obj: Objective,
    epsilon: f64,
    opts: &HeuristicOptions,
) -> Result<Bipartition, PartitionError> {
    let n = graph.node_count();
    weights.validate(graph)?;
    let max_diff = max_imbalance(n, epsilon);
    if n < 2 || (max_diff == 0 && n % 2 == 1) {
        return Err(PartitionError::Infeasible { n, epsilon });
    }
    let max_side = (n + max_diff) / 2;
    let bounds = Bounds { max_side, slack_side: max_side + 1 };
    let adj_w = weights.adjacency_weights(graph);
    let (cost, side) = (0..opts.restarts.max(1))
        .into_par_iter()
        .map(|r| (r, run_restart(graph, &adj_w, weights, obj, &bounds, opts, r)))
        .min_by_key(|(r, (cost, _))| (*cost, *r))
        .map(|(_, best)| best)
        .expect("at least one restart");
    let part = Bipartition::new(side, epsilon);
    debug_assert!(part.is_balanced());
    debug_assert_eq!(objective(graph, weights, &part, obj), cost);
    Ok(part)
}
