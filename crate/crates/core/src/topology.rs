//! Undirected router-level topologies.
//!
//! A [`Graph`] is simple (no loops, no parallel edges), its node ids are
//! exactly `0..n`, and every adjacency list is sorted.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type NodeId = u32;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid edge ({0}, {1})")]
    InvalidEdge(NodeId, NodeId),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    adj: Vec<Vec<NodeId>>,
    edge_count: usize,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Self { adj: vec![Vec::new(); n], edge_count: 0 }
    }

    /// Builds a graph from an edge list, rejecting loops, duplicates and
    /// out-of-range ids.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, TopologyError>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let mut g = Self::empty(n);
        for (u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    /// Inserts the undirected edge `uv`, keeping adjacency sorted.
    pub fn add_edge(&mut self, u: NodeId, v: NodeId) -> Result<(), TopologyError> {
        let n = self.adj.len();
        if u == v || u as usize >= n || v as usize >= n {
            return Err(TopologyError::InvalidEdge(u, v));
        }
        let pos = match self.adj[u as usize].binary_search(&v) {
            Ok(_) => return Err(TopologyError::InvalidEdge(u, v)),
            Err(pos) => pos,
        };
        self.adj[u as usize].insert(pos, v);
        let pos = self.adj[v as usize].binary_search(&u).unwrap_err();
        self.adj[v as usize].insert(pos, u);
        self.edge_count += 1;
        Ok(())
    }

    fn add_node(&mut self) -> NodeId {
        self.adj.push(Vec::new());
        (self.adj.len() - 1) as NodeId
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        0..self.adj.len() as NodeId
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adj[v as usize]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adj[v as usize].len()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        (u as usize) < self.adj.len() && self.adj[u as usize].binary_search(&v).is_ok()
    }

    /// Position of `v` within `u`'s adjacency list.
    pub fn neighbor_slot(&self, u: NodeId, v: NodeId) -> Option<usize> {
        self.adj.get(u as usize)?.binary_search(&v).ok()
    }

    /// Undirected edges as `(min, max)` pairs in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, ns)| {
            let u = u as NodeId;
            ns.iter().filter(move |&&v| u < v).map(move |&v| (u, v))
        })
    }

    /// Hop distances from `src`; `None` for unreachable nodes.
    pub fn bfs_distances(&self, src: NodeId) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.adj.len()];
        let mut queue = VecDeque::new();
        dist[src as usize] = Some(0);
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let d = dist[u as usize].unwrap();
            for &w in self.neighbors(u) {
                if dist[w as usize].is_none() {
                    dist[w as usize] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.adj.is_empty() || self.bfs_distances(0).iter().all(Option::is_some)
    }

    pub fn mean_degree(&self) -> f64 {
        if self.adj.is_empty() {
            return 0.0;
        }
        2.0 * self.edge_count as f64 / self.adj.len() as f64
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Membership set over the nodes of a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexSet {
    member: Vec<bool>,
}

impl VertexSet {
    pub fn new(n: usize) -> Self {
        Self { member: vec![false; n] }
    }

    pub fn from_nodes(n: usize, nodes: impl IntoIterator<Item = NodeId>) -> Self {
        let mut set = Self::new(n);
        for v in nodes {
            set.insert(v);
        }
        set
    }

    pub fn from_mask(member: Vec<bool>) -> Self {
        Self { member }
    }

    pub fn insert(&mut self, v: NodeId) {
        self.member[v as usize] = true;
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.member.get(v as usize).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.member.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn complement(&self) -> Self {
        Self { member: self.member.iter().map(|m| !m).collect() }
    }
}

/// `e(v, part)`: 1 when `v` lies outside `part` and has a neighbor inside it.
pub fn boundary_indicator(graph: &Graph, v: NodeId, part: &VertexSet) -> u64 {
    if part.contains(v) {
        return 0;
    }
    graph.neighbors(v).iter().any(|&w| part.contains(w)) as u64
}

/// `|N_{V \ part}(v)|`: number of neighbors of `v` outside `part`.
pub fn external_neighbors(graph: &Graph, v: NodeId, part: &VertexSet) -> u64 {
    graph.neighbors(v).iter().filter(|&&w| !part.contains(w)).count() as u64
}

/// Parameters of the Generalized Linear Preferential model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlpParams {
    pub n: usize,
    /// Probability that a step adds links between existing nodes rather than a new node.
    pub p: f64,
    /// Preference shift: targets are drawn with probability proportional to `degree - beta`.
    pub beta: f64,
    /// Mean number of links added per step.
    pub m_mean: f64,
}

impl GlpParams {
    pub fn with_defaults(n: usize) -> Self {
        Self { n, p: 0.4695, beta: 0.6447, m_mean: 1.13 }
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        let bad = |msg: &str| Err(TopologyError::Parameter(msg.to_string()));
        if self.n < 3 {
            return bad("n must be at least 3");
        }
        if !(0.0..1.0).contains(&self.p) {
            return bad("p must lie in [0, 1)");
        }
        if !self.beta.is_finite() || self.beta >= 1.0 {
            return bad("beta must be finite and below 1");
        }
        if !self.m_mean.is_finite() || self.m_mean < 1.0 {
            return bad("m_mean must be at least 1");
        }
        Ok(())
    }
}

/// Draws nodes with probability proportional to `degree - beta`.
///
/// `endpoints` holds each node once per incident edge, so a uniform pick
/// from it is degree-proportional. For `beta >= 0` the shift is applied by
/// rejection (acceptance `(d - beta) / d`, at least `1 - beta`); for
/// negative `beta` the extra mass `-beta` per node is mixed in as a uniform
/// node draw.
struct PreferentialSampler {
    endpoints: Vec<NodeId>,
    beta: f64,
}

impl PreferentialSampler {
    fn sample(&self, graph: &Graph, rng: &mut ChaCha8Rng) -> NodeId {
        let n = graph.node_count();
        if self.beta >= 0.0 {
            loop {
                let v = self.endpoints[rng.gen_range(0..self.endpoints.len())];
                let d = graph.degree(v) as f64;
                if rng.gen::<f64>() * d < d - self.beta {
                    return v;
                }
            }
        } else {
            let degree_mass = self.endpoints.len() as f64;
            let total = degree_mass - self.beta * n as f64;
            if rng.gen::<f64>() * total < degree_mass {
                self.endpoints[rng.gen_range(0..self.endpoints.len())]
            } else {
                rng.gen_range(0..n) as NodeId
            }
        }
    }

    fn record(&mut self, u: NodeId, v: NodeId) {
        self.endpoints.push(u);
        self.endpoints.push(v);
    }
}

fn links_this_step(m_mean: f64, rng: &mut ChaCha8Rng) -> usize {
    let lo = m_mean.floor();
    let frac = m_mean - lo;
    lo as usize + (rng.gen::<f64>() < frac) as usize
}

/// Generates a GLP topology with exactly `params.n` nodes, seeded from a
/// triangle. Every new node links to the existing component, so the result
/// is connected.
pub fn glp_generate(params: &GlpParams, seed: u64) -> Result<Graph, TopologyError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Graph::empty(3);
    let mut sampler = PreferentialSampler { endpoints: Vec::new(), beta: params.beta };
    for (u, v) in [(0, 1), (1, 2), (0, 2)] {
        g.add_edge(u, v)?;
        sampler.record(u, v);
    }

    while g.node_count() < params.n {
        let m = links_this_step(params.m_mean, &mut rng);
        if rng.gen::<f64>() < params.p {
            let n = g.node_count();
            let free = n * (n - 1) / 2 - g.edge_count();
            for _ in 0..m.min(free) {
                loop {
                    let u = sampler.sample(&g, &mut rng);
                    let v = sampler.sample(&g, &mut rng);
                    if u != v && !g.has_edge(u, v) {
                        g.add_edge(u, v)?;
                        sampler.record(u, v);
                        break;
                    }
                }
            }
        } else {
            let existing = g.node_count();
            let m = m.min(existing);
            let mut targets = BTreeSet::new();
            while targets.len() < m {
                targets.insert(sampler.sample(&g, &mut rng));
            }
            let new = g.add_node();
            for t in targets {
                g.add_edge(new, t)?;
                sampler.record(new, t);
            }
        }
    }
    Ok(g)
}

/// Parses the edge-list format: one `u v` pair per line, `#` starts a
/// comment. A `# nodes N` header fixes the node count; without it the node
/// count is one more than the largest id.
pub fn parse_edgelist(text: &str) -> Result<Graph, TopologyError> {
    let mut declared = None;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let perr = |msg: String| TopologyError::Parse { line, msg };
        let (body, comment) = match raw.find('#') {
            Some(pos) => (&raw[..pos], Some(&raw[pos + 1..])),
            None => (raw, None),
        };
        if let Some(c) = comment {
            let mut words = c.split_whitespace();
            if words.next() == Some("nodes") {
                let n = words
                    .next()
                    .and_then(|w| w.parse::<usize>().ok())
                    .ok_or_else(|| perr("malformed nodes header".into()))?;
                declared = Some(n);
            }
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        match fields.as_slice() {
            [] => {}
            [a, b] => {
                let u: NodeId = a.parse().map_err(|_| perr(format!("bad node id {a:?}")))?;
                let v: NodeId = b.parse().map_err(|_| perr(format!("bad node id {b:?}")))?;
                if u == v {
                    return Err(perr(format!("self-loop on node {u}")));
                }
                edges.push((line, u, v));
            }
            _ => return Err(perr(format!("expected two node ids, found {}", fields.len()))),
        }
    }
    let n = match declared {
        Some(n) => n,
        None => edges.iter().map(|&(_, u, v)| u.max(v) as usize + 1).max().unwrap_or(0),
    };
    let mut g = Graph::empty(n);
    for (line, u, v) in edges {
        if u as usize >= n || v as usize >= n {
            return Err(TopologyError::Parse { line, msg: format!("node id out of range 0..{n}") });
        }
        if g.has_edge(u, v) {
            return Err(TopologyError::Parse { line, msg: format!("duplicate edge {u} {v}") });
        }
        g.add_edge(u, v)?;
    }
    Ok(g)
}

/// Renders `graph` in edge-list format with sorted pairs. `header` lines are
/// emitted as comments after the node-count header.
pub fn format_edgelist(graph: &Graph, header: &[String]) -> String {
    let mut out = String::new();
    writeln!(out, "# nodes {}", graph.node_count()).unwrap();
    for h in header {
        writeln!(out, "# {h}").unwrap();
    }
    for (u, v) in graph.edges() {
        writeln!(out, "{u} {v}").unwrap();
    }
    out
}

pub fn load_edgelist(path: &Path) -> Result<Graph, TopologyError> {
    parse_edgelist(&fs::read_to_string(path)?)
}

pub fn save_edgelist(graph: &Graph, path: &Path, header: &[String]) -> Result<(), TopologyError> {
    fs::write(path, format_edgelist(graph, header))?;
    Ok(())
}
