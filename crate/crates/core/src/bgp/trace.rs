use serde::{Deserialize, Serialize};

use crate::topology::{Graph, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectedEdgeStats {
    pub from: NodeId,
    pub to: NodeId,
    pub updates: u64,
    pub entries: u64,
}

/// Per-run accounting of RT modifications and transmitted updates.
///
/// `me[v]` is |ME(v)|, the number of best-route changes at router `v`
/// (self-origination included). `edges` holds one record per directed
/// graph edge, sorted by `(from, to)`, counting what `from` sent to `to`,
/// including entries the receiver later discarded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStats {
    pub me: Vec<u64>,
    pub edges: Vec<DirectedEdgeStats>,
    pub total_updates: u64,
    pub total_entries: u64,
    pub avg_entries_per_update: f64,
}

impl TraceStats {
    /// Zeroed counters for every directed edge of `graph`.
    pub fn empty(graph: &Graph) -> Self {
        let edges = graph
            .nodes()
            .flat_map(|u| {
                graph.neighbors(u).iter().map(move |&v| DirectedEdgeStats { from: u, to: v, updates: 0, entries: 0 })
            })
            .collect();
        Self { me: vec![0; graph.node_count()], edges, total_updates: 0, total_entries: 0, avg_entries_per_update: 0.0 }
    }

    pub fn node_count(&self) -> usize {
        self.me.len()
    }

    fn index(&self, from: NodeId, to: NodeId) -> Option<usize> {
        self.edges.binary_search_by(|e| (e.from, e.to).cmp(&(from, to))).ok()
    }

    pub fn edge(&self, from: NodeId, to: NodeId) -> Option<&DirectedEdgeStats> {
        self.index(from, to).map(|i| &self.edges[i])
    }

    pub fn edge_entries(&self, from: NodeId, to: NodeId) -> u64 {
        self.edge(from, to).map_or(0, |e| e.entries)
    }

    pub fn edge_updates(&self, from: NodeId, to: NodeId) -> u64 {
        self.edge(from, to).map_or(0, |e| e.updates)
    }

    /// Records one update of `entries` entries sent on `from -> to`.
    pub fn record_update(&mut self, from: NodeId, to: NodeId, entries: u64) {
        let i = self.index(from, to).expect("update sent over a non-edge");
        self.edges[i].updates += 1;
        self.edges[i].entries += entries;
        self.total_updates += 1;
        self.total_entries += entries;
        self.avg_entries_per_update = self.total_entries as f64 / self.total_updates as f64;
    }

    /// Checks the accounting identities: totals equal the per-edge sums,
    /// the average matches, and no edge carries fewer entries than updates.
    pub fn check_invariants(&self) -> Result<(), String> {
        let updates: u64 = self.edges.iter().map(|e| e.updates).sum();
        let entries: u64 = self.edges.iter().map(|e| e.entries).sum();
        if updates != self.total_updates || entries != self.total_entries {
            return Err(format!(
                "totals ({}, {}) disagree with edge sums ({updates}, {entries})",
                self.total_updates, self.total_entries
            ));
        }
        let avg = if updates == 0 { 0.0 } else { entries as f64 / updates as f64 };
        if avg != self.avg_entries_per_update {
            return Err(format!("average {} != {avg}", self.avg_entries_per_update));
        }
        if let Some(e) = self.edges.iter().find(|e| e.entries < e.updates) {
            return Err(format!("edge {}->{} has fewer entries than updates", e.from, e.to));
        }
        if !self.edges.windows(2).all(|w| (w[0].from, w[0].to) < (w[1].from, w[1].to)) {
            return Err("edge records not sorted".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::test_graphs::*;

    #[test]
    fn empty_trace_has_all_directed_edges() {
        let t = TraceStats::empty(&path(3));
        assert_eq!(t.edges.len(), 4);
        assert_eq!(t.avg_entries_per_update, 0.0);
        t.check_invariants().unwrap();
    }

    #[test]
    fn recording_keeps_totals_consistent() {
        let mut t = TraceStats::empty(&complete(3));
        t.record_update(0, 1, 3);
        t.record_update(2, 1, 1);
        assert_eq!(t.edge_entries(0, 1), 3);
        assert_eq!(t.edge_updates(0, 1), 1);
        assert_eq!(t.edge_entries(1, 0), 0);
        assert_eq!(t.total_entries, 4);
        assert_eq!(t.avg_entries_per_update, 2.0);
        t.check_invariants().unwrap();
    }
}
