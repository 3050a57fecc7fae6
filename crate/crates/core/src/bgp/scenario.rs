use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::router::{Outputs, RoutingTable, UpdateMessage};
use super::trace::TraceStats;
use super::BgpError;
use crate::sim::{EventQueue, OrderingPolicy, Payload, Tick, DEFAULT_EVENT_CAP};
use crate::topology::{Graph, NodeId};

/// The three execution scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Scenario {
    /// All sessions come up first, then updates are delivered in scheduled order.
    SessionsFirst,
    /// As [`Scenario::SessionsFirst`], but deliveries are executed in random order.
    RandomDelivery,
    /// Sessions come up one at a time, each followed by a run to quiescence.
    Incremental,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::SessionsFirst, Scenario::RandomDelivery, Scenario::Incremental];

    pub fn number(self) -> u8 {
        match self {
            Scenario::SessionsFirst => 1,
            Scenario::RandomDelivery => 2,
            Scenario::Incremental => 3,
        }
    }
}

impl TryFrom<u8> for Scenario {
    type Error = BgpError;

    fn try_from(n: u8) -> Result<Self, BgpError> {
        match n {
            1 => Ok(Scenario::SessionsFirst),
            2 => Ok(Scenario::RandomDelivery),
            3 => Ok(Scenario::Incremental),
            other => Err(BgpError::InvalidScenario(other)),
        }
    }
}

impl From<Scenario> for u8 {
    fn from(s: Scenario) -> u8 {
        s.number()
    }
}

/// Order in which scenario 3 brings sessions up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionOrder {
    /// Edges sorted by (smaller endpoint, larger endpoint).
    #[default]
    Canonical,
    /// Canonical order shuffled with the scenario seed.
    Shuffled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    /// MinRouteAdvertisementInterval in ticks; 0 disables batching.
    pub mrai: Tick,
    pub seed: u64,
    #[serde(default)]
    pub session_order: SessionOrder,
    #[serde(default = "default_cap")]
    pub event_cap: u64,
}

fn default_cap() -> u64 {
    DEFAULT_EVENT_CAP
}

impl ScenarioConfig {
    pub fn new(scenario: Scenario) -> Self {
        Self { scenario, mrai: 0, seed: 0, session_order: SessionOrder::Canonical, event_cap: DEFAULT_EVENT_CAP }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_mrai(mut self, mrai: Tick) -> Self {
        self.mrai = mrai;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum BgpEvent {
    SessionEstablish(NodeId, NodeId),
    Origination(NodeId),
    UpdateDelivery(UpdateMessage),
    MraiExpiry { router: NodeId, peer: NodeId },
}

/// Each directed session is one delivery channel.
impl Payload for BgpEvent {
    fn delivery_channel(&self) -> Option<u64> {
        match self {
            BgpEvent::UpdateDelivery(m) => Some((u64::from(m.sender) << 32) | u64::from(m.receiver)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCounts {
    pub sessions: u64,
    pub originations: u64,
    pub deliveries: u64,
    pub mrai_expiries: u64,
}

impl EventCounts {
    pub fn total(&self) -> u64 {
        self.sessions + self.originations + self.deliveries + self.mrai_expiries
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub trace: TraceStats,
    pub tables: Vec<RoutingTable>,
    pub events: EventCounts,
}

struct Engine<'g> {
    graph: &'g Graph,
    mrai: Tick,
    tables: Vec<RoutingTable>,
    trace: TraceStats,
    events: EventCounts,
}

impl Engine<'_> {
    fn send(&mut self, msg: UpdateMessage, queue: &mut EventQueue<BgpEvent>) -> Result<(), BgpError> {
        self.trace.record_update(msg.sender, msg.receiver, msg.entries.len() as u64);
        queue.schedule_in(1, BgpEvent::UpdateDelivery(msg))?;
        Ok(())
    }

    fn emit(&mut self, router: NodeId, out: Outputs, queue: &mut EventQueue<BgpEvent>) -> Result<(), BgpError> {
        for msg in out.messages {
            self.send(msg, queue)?;
        }
        for peer in out.arm_timers {
            queue.schedule_in(self.mrai, BgpEvent::MraiExpiry { router, peer })?;
        }
        Ok(())
    }

    fn establish(&mut self, u: NodeId, v: NodeId, queue: &mut EventQueue<BgpEvent>) -> Result<(), BgpError> {
        if !self.graph.has_edge(u, v) {
            return Err(BgpError::NoSuchLink(u, v));
        }
        let from_u = self.tables[u as usize].open_session(v)?;
        let from_v = self.tables[v as usize].open_session(u)?;
        for msg in from_u.into_iter().chain(from_v) {
            self.send(msg, queue)?;
        }
        Ok(())
    }

    fn handle(&mut self, event: BgpEvent, queue: &mut EventQueue<BgpEvent>) -> Result<(), BgpError> {
        match event {
            BgpEvent::SessionEstablish(u, v) => {
                self.events.sessions += 1;
                self.establish(u, v, queue)
            }
            BgpEvent::Origination(v) => {
                self.events.originations += 1;
                let out = self.tables[v as usize].originate();
                self.emit(v, out, queue)
            }
            BgpEvent::UpdateDelivery(msg) => {
                self.events.deliveries += 1;
                let out = self.tables[msg.receiver as usize].process_update(&msg)?;
                self.emit(msg.receiver, out, queue)
            }
            BgpEvent::MraiExpiry { router, peer } => {
                self.events.mrai_expiries += 1;
                if let Some(msg) = self.tables[router as usize].mrai_flush(peer) {
                    self.send(msg, queue)?;
                    queue.schedule_in(self.mrai, BgpEvent::MraiExpiry { router, peer })?;
                }
                Ok(())
            }
        }
    }

    fn drain(&mut self, queue: &mut EventQueue<BgpEvent>) -> Result<u64, BgpError> {
        queue.run_until_quiescent(|event, q| self.handle(event.payload, q))
    }
}

/// Runs one scenario from empty routing tables to quiescence.
///
/// * Scenario 1 schedules every session at tick 0, then every origination,
///   and delivers updates in `(time, seq)` order, one tick per hop.
/// * Scenario 2 is scenario 1 with random delivery order seeded by
///   `config.seed`.
/// * Scenario 3 originates every prefix first (no sessions yet, so nothing
///   is sent), then brings sessions up one at a time in `session_order`,
///   running to quiescence after each.
pub fn run_scenario(graph: &Graph, config: &ScenarioConfig) -> Result<ScenarioRun, BgpError> {
    if !graph.is_connected() {
        return Err(BgpError::Disconnected);
    }
    let mut engine = Engine {
        graph,
        mrai: config.mrai,
        tables: graph.nodes().map(|v| RoutingTable::new(graph, v, config.mrai)).collect(),
        trace: TraceStats::empty(graph),
        events: EventCounts::default(),
    };
    let policy = match config.scenario {
        Scenario::RandomDelivery => OrderingPolicy::RandomDelivery { seed: config.seed },
        _ => OrderingPolicy::Fifo,
    };
    let mut queue = EventQueue::new(policy).with_event_cap(config.event_cap);

    match config.scenario {
        Scenario::SessionsFirst | Scenario::RandomDelivery => {
            for (u, v) in graph.edges() {
                queue.schedule(0, BgpEvent::SessionEstablish(u, v))?;
            }
            for v in graph.nodes() {
                queue.schedule(0, BgpEvent::Origination(v))?;
            }
            engine.drain(&mut queue)?;
        }
        Scenario::Incremental => {
            for v in graph.nodes() {
                queue.schedule(0, BgpEvent::Origination(v))?;
            }
            engine.drain(&mut queue)?;
            let mut order: Vec<_> = graph.edges().collect();
            if config.session_order == SessionOrder::Shuffled {
                order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));
            }
            for (u, v) in order {
                queue.schedule(queue.now(), BgpEvent::SessionEstablish(u, v))?;
                engine.drain(&mut queue)?;
            }
        }
    }

    for (v, table) in engine.tables.iter().enumerate() {
        engine.trace.me[v] = table.modifications();
    }
    Ok(ScenarioRun { trace: engine.trace, tables: engine.tables, events: engine.events })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bgp::AsPath;
    use crate::topology::test_graphs::*;
    use crate::topology::{glp_generate, GlpParams};

    fn run(g: &Graph, scenario: Scenario, seed: u64) -> ScenarioRun {
        run_scenario(g, &ScenarioConfig::new(scenario).with_seed(seed)).unwrap()
    }

    fn assert_converged(g: &Graph, r: &ScenarioRun) {
        for u in g.nodes() {
            let dist = g.bfs_distances(u);
            let table = &r.tables[u as usize];
            table.check_invariants().unwrap();
            for v in g.nodes() {
                let best = table.best(v).expect("route to every destination");
                let expected = if u == v { 1 } else { dist[v as usize].unwrap() as usize };
                assert_eq!(best.len(), expected, "router {u} to {v}: {best:?}");
            }
        }
        r.trace.check_invariants().unwrap();
    }

    fn same_tables(a: &ScenarioRun, b: &ScenarioRun) -> bool {
        a.tables.iter().zip(&b.tables).all(|(x, y)| x.best_routes().eq(y.best_routes()))
    }

    #[test]
    fn k2_oracle_trace() {
        // Hand simulation: session (empty tables, nothing sent), both
        // originations send their self-route, each side installs the other's
        // prefix and advertises it back, where the loop check drops it.
        let k2 = complete(2);
        for scenario in Scenario::ALL {
            let r = run(&k2, scenario, 1);
            assert_eq!(r.trace.total_updates, 4, "{scenario:?}");
            assert_eq!(r.trace.total_entries, 4);
            assert_eq!(r.trace.me, vec![2, 2]);
            assert_eq!(r.trace.edge_entries(0, 1), 2);
            assert_eq!(r.trace.edge_entries(1, 0), 2);
            assert_eq!(r.events.total(), 7);
            assert_eq!(r.events.sessions, 1);
            assert_eq!(r.events.originations, 2);
            assert_eq!(r.events.deliveries, 4);
            assert_converged(&k2, &r);
        }
    }

    #[test]
    fn p3_converges_to_bfs_paths() {
        let p3 = path(3);
        let r = run(&p3, Scenario::SessionsFirst, 0);
        assert_converged(&p3, &r);
        assert_eq!(r.tables[0].best(2), Some(&AsPath::from_hops(&[1, 2]).unwrap()));
        assert!(r.trace.me[1] >= r.trace.me[0]);
        // Scenario 1 with MRAI 0: every modification reaches every peer once.
        let expected: u64 = p3.nodes().map(|v| r.trace.me[v as usize] * p3.degree(v) as u64).sum();
        assert_eq!(r.trace.total_entries, expected);
        assert_eq!(r.trace.avg_entries_per_update, 1.0);
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let g = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert!(matches!(run_scenario(&g, &ScenarioConfig::new(Scenario::SessionsFirst)), Err(BgpError::Disconnected)));
    }

    #[test]
    fn scenario_numbers_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(Scenario::try_from(s.number()).unwrap(), s);
        }
        assert_eq!(Scenario::try_from(4), Err(BgpError::InvalidScenario(4)));
        assert_eq!(serde_json::to_string(&Scenario::Incremental).unwrap(), "3");
        assert!(serde_json::from_str::<Scenario>("0").is_err());
    }

    #[test]
    fn event_cap_triggers_divergence() {
        let g = cycle(6);
        let mut cfg = ScenarioConfig::new(Scenario::SessionsFirst);
        cfg.event_cap = 5;
        assert!(matches!(run_scenario(&g, &cfg), Err(BgpError::Sim(_))));
    }

    #[test]
    fn all_scenarios_reach_the_same_fixed_point() {
        for seed in 0..6 {
            let g = glp_generate(&GlpParams::with_defaults(60), seed).unwrap();
            let s1 = run(&g, Scenario::SessionsFirst, seed);
            assert_converged(&g, &s1);
            for other in [
                run(&g, Scenario::RandomDelivery, seed),
                run(&g, Scenario::RandomDelivery, seed + 99),
                run(&g, Scenario::Incremental, seed),
                run_scenario(
                    &g,
                    &ScenarioConfig {
                        session_order: SessionOrder::Shuffled,
                        ..ScenarioConfig::new(Scenario::Incremental).with_seed(seed)
                    },
                )
                .unwrap(),
            ] {
                assert_converged(&g, &other);
                assert!(same_tables(&s1, &other));
            }
        }
    }

    #[test]
    fn random_delivery_is_seed_deterministic() {
        let g = glp_generate(&GlpParams::with_defaults(80), 4).unwrap();
        let a = run(&g, Scenario::RandomDelivery, 11);
        let b = run(&g, Scenario::RandomDelivery, 11);
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.events, b.events);
    }

    #[test]
    fn incremental_sessions_batch_full_tables() {
        let g = glp_generate(&GlpParams::with_defaults(80), 2).unwrap();
        let r = run(&g, Scenario::Incremental, 0);
        assert!(r.trace.avg_entries_per_update > 1.0);
        assert_eq!(r.events.sessions as usize, g.edge_count());
    }

    #[test]
    fn mrai_batching_reduces_updates_and_keeps_fixed_point() {
        let g = glp_generate(&GlpParams::with_defaults(80), 9).unwrap();
        let base = run(&g, Scenario::SessionsFirst, 0);
        for scenario in Scenario::ALL {
            let batched = run_scenario(&g, &ScenarioConfig::new(scenario).with_mrai(5).with_seed(3)).unwrap();
            assert_converged(&g, &batched);
            assert!(same_tables(&base, &batched));
            assert!(batched.events.mrai_expiries > 0);
            assert!(batched.trace.avg_entries_per_update > 1.0);
        }
        let batched = run_scenario(&g, &ScenarioConfig::new(Scenario::SessionsFirst).with_mrai(5)).unwrap();
        assert!(batched.trace.total_updates < base.trace.total_updates);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(16))]

            #[test]
            fn convergence_and_me_identity(n in 3usize..70, gseed in any::<u64>(), seed in any::<u64>()) {
                let g = glp_generate(&GlpParams::with_defaults(n), gseed).unwrap();
                let s1 = run(&g, Scenario::SessionsFirst, seed);
                assert_converged(&g, &s1);
                let expected: u64 = g.nodes().map(|v| s1.trace.me[v as usize] * g.degree(v) as u64).sum();
                prop_assert_eq!(s1.trace.total_entries, expected);
                for e in &s1.trace.edges {
                    prop_assert_eq!(e.entries, s1.trace.me[e.from as usize]);
                }
                let s2 = run(&g, Scenario::RandomDelivery, seed);
                prop_assert!(same_tables(&s1, &s2));
                prop_assert!(s2.trace.total_entries >= s1.trace.total_entries);
            }
        }
    }
}
