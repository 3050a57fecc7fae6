use std::collections::BTreeSet;

use super::path::AsPath;
use super::BgpError;
use crate::topology::{Graph, NodeId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouteEntry {
    pub dest: NodeId,
    pub path: AsPath,
}

impl RouteEntry {
    pub fn new(path: AsPath) -> Self {
        Self { dest: path.dest(), path }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpdateMessage {
    pub sender: NodeId,
    pub receiver: NodeId,
    pub entries: Vec<RouteEntry>,
}

/// Best-path selection: the minimum by (path length, next hop, lexicographic
/// path) over the received candidates and, for the router's own prefix, the
/// self-origination.
pub fn decision<'a>(
    candidates: impl IntoIterator<Item = &'a AsPath>,
    self_origination: Option<&'a AsPath>,
) -> Option<AsPath> {
    candidates.into_iter().chain(self_origination).min().cloned()
}

/// What a router asks of the engine after handling an input.
#[derive(Debug, Default, PartialEq, Eq)]
pub struct Outputs {
    pub messages: Vec<UpdateMessage>,
    /// Peers whose MRAI timer was just armed and needs an expiry event.
    pub arm_timers: Vec<NodeId>,
}

/// Per-router state: best routes, Adj-RIB-In, established sessions and
/// MRAI bookkeeping. Peers are addressed by their slot in the router's
/// sorted neighbor list.
#[derive(Debug, Clone)]
pub struct RoutingTable {
    id: NodeId,
    peers: Vec<NodeId>,
    established: Vec<bool>,
    best: Vec<Option<AsPath>>,
    ribin: Vec<Vec<Option<AsPath>>>,
    mrai: u64,
    pending: Vec<BTreeSet<NodeId>>,
    timer_armed: Vec<bool>,
    modifications: u64,
}

impl RoutingTable {
    /// An empty table for router `id` with the graph neighbors as potential peers.
    pub fn new(graph: &Graph, id: NodeId, mrai: u64) -> Self {
        let peers = graph.neighbors(id).to_vec();
        let deg = peers.len();
        Self {
            id,
            peers,
            established: vec![false; deg],
            best: vec![None; graph.node_count()],
            ribin: vec![Vec::new(); deg],
            mrai,
            pending: vec![BTreeSet::new(); deg],
            timer_armed: vec![false; deg],
            modifications: 0,
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn best(&self, dest: NodeId) -> Option<&AsPath> {
        self.best.get(dest as usize)?.as_ref()
    }

    /// Best routes in destination order.
    pub fn best_routes(&self) -> impl Iterator<Item = RouteEntry> + '_ {
        self.best.iter().flatten().map(|p| RouteEntry::new(p.clone()))
    }

    pub fn route_count(&self) -> usize {
        self.best.iter().filter(|b| b.is_some()).count()
    }

    pub fn received(&self, peer: NodeId, dest: NodeId) -> Option<&AsPath> {
        let slot = self.slot(peer)?;
        self.ribin[slot].get(dest as usize)?.as_ref()
    }

    /// Number of RT modifications (|ME(v)|) performed so far.
    pub fn modifications(&self) -> u64 {
        self.modifications
    }

    pub fn is_established(&self, peer: NodeId) -> bool {
        self.slot(peer).is_some_and(|s| self.established[s])
    }

    fn slot(&self, peer: NodeId) -> Option<usize> {
        self.peers.binary_search(&peer).ok()
    }

    /// The path advertised to peers for `dest`: the best path with this
    /// router prepended, or the bare self-route for its own prefix.
    fn advertised(&self, dest: NodeId) -> Option<RouteEntry> {
        let best = self.best[dest as usize].as_ref()?;
        let path = if dest == self.id { best.clone() } else { best.prepend(self.id) };
        Some(RouteEntry { dest, path })
    }

    /// Installs the self-route. Counts as one modification and is
    /// advertised to every established peer.
    pub fn originate(&mut self) -> Outputs {
        let own = AsPath::origin(self.id);
        let mut out = Outputs::default();
        if self.best[self.id as usize].as_ref() != Some(&own) {
            self.best[self.id as usize] = Some(own);
            self.modifications += 1;
            self.announce(self.id, &mut out);
        }
        out
    }

    /// Marks the session to `peer` as up and returns the full-table dump for it.
    pub fn open_session(&mut self, peer: NodeId) -> Result<Option<UpdateMessage>, BgpError> {
        let slot = self.slot(peer).ok_or(BgpError::NoSuchLink(self.id, peer))?;
        if self.established[slot] {
            return Err(BgpError::DuplicateSession(self.id.min(peer), self.id.max(peer)));
        }
        self.established[slot] = true;
        self.ribin[slot] = vec![None; self.best.len()];
        let entries: Vec<_> = (0..self.best.len() as NodeId).filter_map(|d| self.advertised(d)).collect();
        if entries.is_empty() {
            return Ok(None);
        }
        Ok(Some(UpdateMessage { sender: self.id, receiver: peer, entries }))
    }

    /// Applies an update received from a peer. Entries whose path already
    /// contains this router are discarded; every change of best route is
    /// counted and advertised to all established peers.
    pub fn process_update(&mut self, msg: &UpdateMessage) -> Result<Outputs, BgpError> {
        let malformed = |why: &str| BgpError::MalformedUpdate(msg.sender, msg.receiver, why.into());
        if msg.receiver != self.id {
            return Err(malformed("delivered to the wrong router"));
        }
        if msg.entries.is_empty() {
            return Err(malformed("no entries"));
        }
        let slot = self
            .slot(msg.sender)
            .filter(|&s| self.established[s])
            .ok_or_else(|| malformed("no established session with sender"))?;

        let mut out = Outputs::default();
        for entry in &msg.entries {
            if entry.dest as usize >= self.best.len() || entry.path.dest() != entry.dest {
                return Err(malformed("entry path does not end at its destination"));
            }
            if entry.path.next_hop() != msg.sender {
                return Err(malformed("entry path does not start at the sender"));
            }
            if entry.path.contains(self.id) {
                continue;
            }
            let dest = entry.dest as usize;
            self.ribin[slot][dest] = Some(entry.path.clone());

            let current = self.best[dest].as_ref();
            let new_best = match current {
                Some(cur) if entry.path >= *cur && cur.next_hop() != msg.sender => None,
                Some(cur) if entry.path < *cur => Some(entry.path.clone()),
                None => Some(entry.path.clone()),
                // The current best came from this sender and was replaced
                // by something no better: re-run the full decision.
                Some(_) => decision(self.ribin.iter().filter_map(|r| r.get(dest)?.as_ref()), None),
            };
            if let Some(nb) = new_best {
                if self.best[dest].as_ref() != Some(&nb) {
                    self.best[dest] = Some(nb);
                    self.modifications += 1;
                    self.announce(entry.dest, &mut out);
                }
            }
        }
        Ok(out)
    }

    fn announce(&mut self, dest: NodeId, out: &mut Outputs) {
        let Some(entry) = self.advertised(dest) else { return };
        for slot in 0..self.peers.len() {
            if !self.established[slot] {
                continue;
            }
            if self.mrai == 0 || !self.timer_armed[slot] {
                out.messages.push(UpdateMessage {
                    sender: self.id,
                    receiver: self.peers[slot],
                    entries: vec![entry.clone()],
                });
                if self.mrai > 0 {
                    self.timer_armed[slot] = true;
                    out.arm_timers.push(self.peers[slot]);
                }
            } else {
                self.pending[slot].insert(dest);
            }
        }
    }

    /// MRAI expiry for `peer`: batches every pending destination into one
    /// update carrying the current best routes. Returns `None` and disarms
    /// the timer when nothing is pending; otherwise the timer stays armed
    /// and the caller schedules the next expiry.
    pub fn mrai_flush(&mut self, peer: NodeId) -> Option<UpdateMessage> {
        let slot = self.slot(peer)?;
        let pending = std::mem::take(&mut self.pending[slot]);
        let entries: Vec<_> = pending.into_iter().filter_map(|d| self.advertised(d)).collect();
        if entries.is_empty() {
            self.timer_armed[slot] = false;
            return None;
        }
        Some(UpdateMessage { sender: self.id, receiver: peer, entries })
    }

    /// Checks the table invariants: loop-free paths ending at their
    /// destination, the self-route in place, and every learned best route
    /// present in the Adj-RIB-In.
    pub fn check_invariants(&self) -> Result<(), String> {
        for (dest, best) in self.best.iter().enumerate() {
            let Some(best) = best else { continue };
            if best.dest() as usize != dest || !best.is_loop_free() {
                return Err(format!("router {}: bad path {best:?} for {dest}", self.id));
            }
            if dest == self.id as usize {
                if best.len() != 1 {
                    return Err(format!("router {}: self-route {best:?}", self.id));
                }
            } else if self.received(best.next_hop(), dest as NodeId) != Some(best) {
                return Err(format!("router {}: best {best:?} not in Adj-RIB-In", self.id));
            }
        }
        Ok(())
    }
}
