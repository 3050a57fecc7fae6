//! Topology -> simulation -> partition -> analysis through the public API.

use bgpdist_core::analysis::{AnalysisOptions, OverheadReport};
use bgpdist_core::bgp::{run_scenario, Scenario, ScenarioConfig, ScenarioRun};
use bgpdist_core::partition::{
    exact_bipartition, heuristic_bipartition, objective, weights_from_trace, HeuristicOptions, Objective,
    DEFAULT_EPSILON,
};
use bgpdist_core::topology::{format_edgelist, glp_generate, parse_edgelist, GlpParams, Graph};
use proptest::prelude::*;

fn glp(n: usize, seed: u64) -> Graph {
    glp_generate(&GlpParams::with_defaults(n), seed).unwrap()
}

fn run(graph: &Graph, scenario: Scenario, seed: u64) -> ScenarioRun {
    run_scenario(graph, &ScenarioConfig::new(scenario).with_seed(seed)).unwrap()
}

/// Converged tables hold a loop-free shortest path to every destination.
fn assert_shortest_paths(graph: &Graph, run: &ScenarioRun) {
    for u in graph.nodes() {
        let dist = graph.bfs_distances(u);
        let table = &run.tables[u as usize];
        assert_eq!(table.route_count(), graph.node_count());
        for d in graph.nodes() {
            let path = table.best(d).unwrap_or_else(|| panic!("{u} has no route to {d}"));
            assert_eq!(path.dest(), d);
            assert!(path.is_loop_free());
            assert_eq!(path.len(), dist[d as usize].unwrap().max(1) as usize, "{u} -> {d}");
        }
    }
}

#[test]
fn every_scenario_converges_to_shortest_paths() {
    let g = glp(60, 3);
    assert!(g.is_connected());
    for s in Scenario::ALL {
        let r = run(&g, s, 11);
        assert_shortest_paths(&g, &r);
        r.trace.check_invariants().unwrap();
        let sum: u64 = r.trace.edges.iter().map(|e| e.entries).sum();
        assert_eq!(sum, r.trace.total_entries);
    }
}

#[test]
fn edgelist_round_trip_preserves_simulation() {
    let g = glp(40, 8);
    let back = parse_edgelist(&format_edgelist(&g, &[])).unwrap();
    let a = run(&g, Scenario::SessionsFirst, 0);
    let b = run(&back, Scenario::SessionsFirst, 0);
    assert_eq!(a.trace.total_entries, b.trace.total_entries);
    assert_eq!(a.trace.me, b.trace.me);
}

#[test]
fn full_pipeline_on_a_small_topology() {
    let g = glp(20, 5);
    let r = run(&g, Scenario::SessionsFirst, 0);
    let w = weights_from_trace(&r.trace, &g).unwrap();
    let opts = HeuristicOptions { restarts: 8, seed: 2, max_passes: 20 };

    let exact_a = exact_bipartition(&g, &w, Objective::EdgeCut, DEFAULT_EPSILON, 24).unwrap();
    let exact_b = exact_bipartition(&g, &w, Objective::VertexBoundary, DEFAULT_EPSILON, 24).unwrap();
    let heur_a = heuristic_bipartition(&g, &w, Objective::EdgeCut, DEFAULT_EPSILON, &opts).unwrap();
    assert!(heur_a.is_balanced());
    assert!(objective(&g, &w, &heur_a, Objective::EdgeCut) >= exact_a.cost);
    assert!(exact_a.unconstrained_cost <= exact_a.cost);

    let rep = OverheadReport::evaluate(
        &g,
        &r.trace,
        Some(&exact_a.partition),
        Some(&exact_b.partition),
        &AnalysisOptions::default(),
    )
    .unwrap();
    assert_eq!(rep.n, 20);
    assert_eq!(rep.total_entries, r.trace.total_entries);
    let cross = rep.measured_cross_entries.unwrap();
    assert!(cross > 0 && cross <= rep.total_entries);
    assert_eq!(rep.cross_fraction.unwrap(), cross as f64 / rep.total_entries as f64);
    assert!(rep.mem_overhead_b_bits.unwrap() > 0);
}

#[test]
fn mismatched_sizes_are_rejected() {
    let g = glp(20, 5);
    let other = glp(21, 5);
    let r = run(&other, Scenario::SessionsFirst, 0);
    assert!(OverheadReport::evaluate(&g, &r.trace, None, None, &AnalysisOptions::default()).is_err());
    assert!(weights_from_trace(&r.trace, &g).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scenarios_agree_on_converged_path_lengths(n in 5usize..30, topo in 0u64..1000, seed in 0u64..1000) {
        let g = glp(n, topo);
        let base = run(&g, Scenario::SessionsFirst, 0);
        for s in [Scenario::RandomDelivery, Scenario::Incremental] {
            let r = run(&g, s, seed);
            for u in g.nodes() {
                for d in g.nodes() {
                    prop_assert_eq!(
                        r.tables[u as usize].best(d).map(|p| p.len()),
                        base.tables[u as usize].best(d).map(|p| p.len())
                    );
                }
            }
        }
    }

    #[test]
    fn random_delivery_is_reproducible(n in 5usize..25, topo in 0u64..1000, seed in 0u64..1000) {
        let g = glp(n, topo);
        let a = run(&g, Scenario::RandomDelivery, seed);
        let b = run(&g, Scenario::RandomDelivery, seed);
        prop_assert_eq!(a.events, b.events);
        prop_assert_eq!(a.trace.total_entries, b.trace.total_entries);
        prop_assert_eq!(a.trace.me, b.trace.me);
    }
}
