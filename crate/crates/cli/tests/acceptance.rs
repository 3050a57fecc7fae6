//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS or FAIL line; exits nonzero if any
//! criterion fails.

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use bgpdist_cli::commands::{analyze_counts, cmd_pipeline, CountsOverride};
use bgpdist_cli::config::RunConfig;
use bgpdist_core::analysis::{
    comm_entries_a, extrapolate, measured_cross_entries, sqrt_linear_fit, time_overhead, GrowthModel,
};
use bgpdist_core::bgp::{run_scenario, Scenario, ScenarioConfig, ScenarioRun};
use bgpdist_core::partition::{
    exact_bipartition, heuristic_bipartition, Bipartition, EdgeWeight, HeuristicOptions, Objective, WeightSpec,
};
use bgpdist_core::topology::{glp_generate, GlpParams, Graph};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

const LATENCY: f64 = 0.26e-3;

fn within(value: f64, reference: f64, tol: f64) -> bool {
    (value - reference).abs() <= tol * reference.abs()
}

fn glp(n: usize, seed: u64) -> Graph {
    glp_generate(&GlpParams::with_defaults(n), seed).unwrap()
}

fn simulate(g: &Graph, scenario: Scenario, seed: u64) -> ScenarioRun {
    run_scenario(g, &ScenarioConfig::new(scenario).with_seed(seed)).unwrap()
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c1_time_overhead() -> Verdict {
    let a = time_overhead(10.5e6, LATENCY);
    let b = time_overhead(25.2e6, LATENCY);
    check((a - 2730.0).abs() < 1e-6, || format!("10.5e6 entries gave {a} s, expected 2730 s"))?;
    check(within(a, 45.0 * 60.0, 0.05), || format!("{a} s not within 5% of 45 min"))?;
    check(within(b, 110.0 * 60.0, 0.05), || format!("{b} s not within 5% of 110 min"))?;
    // The same figures through the command layer's entries override.
    let doc = analyze_counts(
        &RunConfig::default(),
        &CountsOverride {
            n: 5000,
            scenario: Scenario::SessionsFirst,
            entries: 10_500_000,
            total_entries: None,
            internal_updates_b: None,
        },
    )
    .map_err(|e| e.to_string())?;
    let via_cli = doc.overhead.time_overhead.unwrap_or(f64::NAN);
    check(via_cli == a, || format!("override path gave {via_cli} s"))?;
    Ok(format!("10.5e6 -> {:.1} min (45), 25.2e6 -> {:.1} min (110)", a / 60.0, b / 60.0))
}

fn c2_extrapolation() -> Verdict {
    let prop = |n: f64, v: f64, t: f64| extrapolate(&[(n, v)], t, GrowthModel::Proportional).map(|e| e.value);
    let at10k = prop(5000.0, 45.0, 10_000.0).map_err(|e| e.to_string())?;
    let at100k = prop(5000.0, 45.0, 100_000.0).map_err(|e| e.to_string())?;
    let s2 = prop(5000.0, 110.0, 100_000.0).map_err(|e| e.to_string())? / 60.0;
    check((at10k - 90.0).abs() < 1e-9, || format!("45 min at 5k -> {at10k} min at 10k, expected 90"))?;
    check(within(at10k, 91.0, 0.05), || format!("{at10k} min not within 5% of 91"))?;
    check((at100k / 60.0 - 15.0).abs() < 1e-9, || format!("45 min at 5k -> {at100k} min at 100k, expected 900"))?;
    check(within(s2, 36.0, 0.05), || format!("110 min at 5k -> {s2} h at 100k, not within 5% of 36 h"))?;
    Ok(format!("90 min @10k, {:.1} h @100k, {s2:.2} h @100k (scenario 2)", at100k / 60.0))
}

fn c3_sqrt_linearity() -> Verdict {
    let sizes = [2500.0, 3000.0, 3500.0, 4000.0, 4500.0, 5000.0];
    let rows: [(&str, [f64; 6], f64); 3] = [
        ("scenario 1", [24.6, 36.1, 50.1, 65.0, 83.1, 102.4], 0.995),
        ("scenario 2", [58.7, 87.0, 121.7, 158.8, 204.3, 252.8], 0.99),
        ("scenario 3", [33.5, 49.0, 68.4, 88.0, 111.7, 138.8], 0.99),
    ];
    let mut out = Vec::new();
    for (name, values, threshold) in rows {
        let points: Vec<(f64, f64)> = sizes.iter().zip(values).map(|(&n, v)| (n, v * 1e6)).collect();
        let (_, _, r2) = sqrt_linear_fit(&points).map_err(|e| e.to_string())?;
        check(r2 >= threshold, || format!("{name}: R^2 = {r2:.5} below {threshold}"))?;
        out.push(format!("{name} R^2={r2:.5}"));
    }
    Ok(out.join(", "))
}

fn converged_to_bfs(g: &Graph, run: &ScenarioRun) -> Result<(), String> {
    for u in g.nodes() {
        let dist = g.bfs_distances(u);
        let table = &run.tables[u as usize];
        for v in g.nodes() {
            let best = table.best(v).ok_or_else(|| format!("router {u} has no route to {v}"))?;
            let hops = best.to_vec();
            let ok = if u == v {
                hops == [u]
            } else {
                best.len() == dist[v as usize].unwrap() as usize
                    && best.dest() == v
                    && g.has_edge(u, best.next_hop())
                    && best.is_loop_free()
                    && !best.contains(u)
            };
            check(ok, || format!("router {u} to {v}: path {hops:?}, BFS distance {:?}", dist[v as usize]))?;
        }
    }
    Ok(())
}

fn c4_convergence() -> Verdict {
    let cases: Vec<(usize, u64)> = [50, 100, 200, 400].iter().flat_map(|&n| (1..=5).map(move |s| (n, s))).collect();
    cases.par_iter().try_for_each(|&(n, seed)| {
        let g = glp(n, seed);
        for s in Scenario::ALL {
            converged_to_bfs(&g, &simulate(&g, s, seed)).map_err(|e| format!("n={n} seed={seed} {s:?}: {e}"))?;
        }
        Ok::<_, String>(())
    })?;
    Ok(format!("{} topologies x 3 scenarios, all best paths are shortest", cases.len()))
}

fn random_balanced(n: usize, seed: u64) -> Bipartition {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut side = vec![0u8; n];
    for &v in &order[..n / 2] {
        side[v] = 1;
    }
    Bipartition::new(side, 0.0)
}

fn c5_formula_identity() -> Verdict {
    let cases: Vec<(usize, u64)> = [50, 100, 200, 400].iter().flat_map(|&n| (11..=15).map(move |s| (n, s))).collect();
    let cut_totals = cases
        .par_iter()
        .map(|&(n, seed)| {
            let g = glp(n, seed);
            let run = simulate(&g, Scenario::SessionsFirst, 0);
            let part = random_balanced(n, seed);
            let measured = measured_cross_entries(&run.trace, &part).map_err(|e| e.to_string())?;
            let formula = comm_entries_a(&g, &part, &run.trace.me);
            check(measured == formula, || format!("n={n} seed={seed}: measured {measured} != formula {formula}"))?;
            Ok(measured)
        })
        .collect::<Result<Vec<u64>, String>>()?;
    Ok(format!(
        "{} pairs, exact equality (largest cut carries {} entries)",
        cases.len(),
        cut_totals.iter().max().unwrap()
    ))
}

fn small_graphs() -> Vec<Graph> {
    vec![
        Graph::from_edges(2, [(0, 1)]).unwrap(),
        Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap(),
        Graph::from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap(),
        Graph::from_edges(6, (1..6).map(|v| (0, v))).unwrap(),
        Graph::from_edges(5, (0..5).flat_map(|u| (u + 1..5).map(move |v| (u, v)))).unwrap(),
    ]
}

fn c6_me_identity() -> Verdict {
    let mut graphs = small_graphs();
    for n in [50, 100, 200, 400] {
        for seed in 1..=5 {
            graphs.push(glp(n, seed));
        }
    }
    graphs.par_iter().try_for_each(|g| {
        let run = simulate(g, Scenario::SessionsFirst, 0);
        let expected: u64 = g.nodes().map(|v| run.trace.me[v as usize] * g.degree(v) as u64).sum();
        check(run.trace.total_entries == expected, || {
            format!("n={}: total entries {} != sum me*deg {expected}", g.node_count(), run.trace.total_entries)
        })
    })?;
    Ok(format!("{} graphs, total entries = sum of me(v)*deg(v)", graphs.len()))
}

/// Random weighted instance with `n <= 14`.
fn weighted_instance(index: u64) -> (Graph, WeightSpec) {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce97 + index);
    let n = rng.gen_range(4..=14);
    let p = rng.gen_range(0.2..0.6);
    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    let g = Graph::from_edges(n, edges).unwrap();
    let edge_w = g.edges().map(|(u, v)| EdgeWeight { u, v, w: rng.gen_range(1..=20) }).collect();
    let vertex_w = (0..n).map(|_| rng.gen_range(1..=30)).collect();
    (g, WeightSpec { edges: edge_w, vertices: vertex_w })
}

/// Minimum over every balance-feasible split, evaluated from scratch.
fn enumerate(g: &Graph, w: &WeightSpec, obj: Objective, eps: f64) -> Option<u64> {
    let n = g.node_count();
    let max_diff = (eps * n as f64 + 1e-9).floor() as i64;
    let mut best = None;
    for mask in 0u32..1 << n {
        let ones = mask.count_ones() as i64;
        let zeros = n as i64 - ones;
        if ones == 0 || zeros == 0 || (ones - zeros).abs() > max_diff {
            continue;
        }
        let side = |v: u32| (mask >> v) & 1;
        let cost = match obj {
            Objective::EdgeCut => w.edges.iter().filter(|e| side(e.u) != side(e.v)).map(|e| e.w).sum(),
            Objective::VertexBoundary => g
                .nodes()
                .filter(|&v| g.neighbors(v).iter().any(|&x| side(x) != side(v)))
                .map(|v| w.vertices[v as usize])
                .sum(),
        };
        best = Some(best.map_or(cost, |b: u64| b.min(cost)));
    }
    best
}

const COMBOS: [(Objective, f64); 4] = [
    (Objective::EdgeCut, 0.0),
    (Objective::EdgeCut, 0.1),
    (Objective::VertexBoundary, 0.0),
    (Objective::VertexBoundary, 0.1),
];

fn c7_exact_oracle() -> Verdict {
    let checked = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let (g, w) = weighted_instance(i);
            let mut feasible = 0;
            for (obj, eps) in COMBOS {
                let expected = enumerate(&g, &w, obj, eps);
                let got = exact_bipartition(&g, &w, obj, eps, 24).ok().map(|s| s.cost);
                check(got == expected, || {
                    format!("instance {i} {obj:?} eps={eps}: exact {got:?}, enumeration {expected:?}")
                })?;
                feasible += usize::from(expected.is_some());
            }
            Ok(feasible)
        })
        .collect::<Result<Vec<usize>, String>>()?;
    Ok(format!("100 instances, {} feasible (objective, epsilon) cases agree", checked.iter().sum::<usize>()))
}

fn c8_heuristic_quality() -> Verdict {
    let results: Vec<(bool, f64)> = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let (g, w) = weighted_instance(i);
            let opts = HeuristicOptions { seed: i, ..HeuristicOptions::default() };
            let mut ok = true;
            let mut worst: f64 = 1.0;
            for (obj, eps) in COMBOS {
                let Ok(exact) = exact_bipartition(&g, &w, obj, eps, 24) else { continue };
                let part = heuristic_bipartition(&g, &w, obj, eps, &opts).expect("feasible for exact is feasible here");
                let cost = bgpdist_core::partition::objective(&g, &w, &part, obj);
                ok &= cost as f64 <= 1.2 * exact.cost as f64;
                if exact.cost > 0 {
                    worst = worst.max(cost as f64 / exact.cost as f64);
                } else if cost > 0 {
                    worst = f64::INFINITY;
                }
            }
            (ok, worst)
        })
        .collect();
    let good = results.iter().filter(|r| r.0).count();
    let worst = results.iter().map(|r| r.1).fold(1.0, f64::max);
    let optimal = results.iter().filter(|r| r.1 == 1.0).count();
    check(good >= 95, || format!("only {good}/100 instances within 1.2x (worst ratio {worst:.3})"))?;
    Ok(format!("{good}/100 within 1.2x on all four cases, {optimal} optimal everywhere, worst ratio {worst:.3}"))
}

fn c9_ordering_effect() -> Verdict {
    let cases: Vec<(usize, u64)> = [100, 200].iter().flat_map(|&n| (1..=5).map(move |s| (n, s))).collect();
    let ratios = cases
        .par_iter()
        .map(|&(n, seed)| {
            let g = glp(n, seed);
            let runs: Vec<ScenarioRun> = Scenario::ALL.iter().map(|&s| simulate(&g, s, seed)).collect();
            let (e1, e2) = (runs[0].trace.total_entries, runs[1].trace.total_entries);
            check(e2 > e1, || format!("n={n} seed={seed}: scenario 2 {e2} entries, scenario 1 {e1}"))?;
            for (k, r) in runs.iter().enumerate().skip(1) {
                let same = runs[0].tables.iter().zip(&r.tables).all(|(a, b)| a.best_routes().eq(b.best_routes()));
                check(same, || format!("n={n} seed={seed}: scenario {} tables differ from scenario 1", k + 1))?;
            }
            Ok(e2 as f64 / e1 as f64)
        })
        .collect::<Result<Vec<f64>, String>>()?;
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().copied().fold(0.0, f64::max);
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    Ok(format!("{} topologies, scenario 2 / scenario 1 entries: min {min:.2}, mean {mean:.2}, max {max:.2} (reference 2.4-2.5 at 2.5k-5k)", ratios.len()))
}

fn c10_partition_trend() -> Verdict {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    for n in [200, 400, 800] {
        let mut cfg = RunConfig::default();
        cfg.topology.n = n;
        let (doc, _) = cmd_pipeline(&cfg, &tmp.path().join(format!("n{n}"))).map_err(|e| e.to_string())?;
        let mut cells = Vec::new();
        for o in &doc.report.overheads {
            let ov = &o.overhead;
            let (a, b) = (ov.measured_cross_entries.unwrap(), ov.internal_updates_b.unwrap());
            let frac = ov.cross_fraction.unwrap();
            let s = o.scenario.number();
            check(frac < 0.5, || format!("n={n} scenario {s}: Sol A carries {:.1}% of entries", 100.0 * frac))?;
            check(b <= a, || format!("n={n} scenario {s}: Sol B {b} > Sol A {a}"))?;
            cells.push(format!("s{s} A {:.1}% B {:.1}%", 100.0 * frac, 100.0 * ov.fraction_b.unwrap()));
        }
        lines.push(format!("n={n}: {}", cells.join(", ")));
    }
    Ok(format!("{} (reference at 5k: A about 10%, B 5-8%)", lines.join("; ")))
}

fn run_all(bin: &str, dir: &Path) -> Result<(), String> {
    let steps: &[&[&str]] = &[
        &["gen", "--n", "150", "--seed", "3", "-o", "g.txt"],
        &["sim", "--graph", "g.txt", "--scenario", "1", "-o", "t1.json"],
        &["sim", "--graph", "g.txt", "--scenario", "2", "--seed", "8", "-o", "t2.json"],
        &["sim", "--graph", "g.txt", "--scenario", "3", "--session-order", "shuffled", "--seed", "8", "-o", "t3.json"],
        &["partition", "--graph", "g.txt", "--trace", "t2.json", "--objective", "A", "--seed", "4", "-o", "pa.json"],
        &["partition", "--graph", "g.txt", "--trace", "t2.json", "--objective", "B", "--seed", "4", "-o", "pb.json"],
        &["gen", "--n", "20", "-o", "small.txt"],
        &[
            "partition",
            "--graph",
            "small.txt",
            "--weights",
            "uniform",
            "--objective",
            "B",
            "--mode",
            "exact",
            "-o",
            "pe.json",
        ],
        &[
            "analyze",
            "--graph",
            "g.txt",
            "--trace",
            "t2.json",
            "--partition-a",
            "pa.json",
            "--partition-b",
            "pb.json",
            "-o",
            "o2.json",
        ],
        &["analyze", "--entries", "10500000", "--nodes", "5000", "--total-entries", "102400000", "-o", "o1.json"],
        &["report", "o1.json", "o2.json", "-o", "r.json"],
        &["pipeline", "--n", "120", "--out-dir", "run"],
    ];
    for args in steps {
        let out = Command::new(bin).current_dir(dir).args(*args).output().map_err(|e| e.to_string())?;
        check(out.status.success(), || format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))?;
    }
    Ok(())
}

fn files(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(files(&path));
        } else {
            out.push(path);
        }
    }
    out.sort();
    out
}

fn c11_determinism() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_bgpdist");
    let (a, b) = (tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?);
    run_all(bin, a.path())?;
    run_all(bin, b.path())?;
    let fa = files(a.path());
    let rel = |p: &Path, root: &Path| p.strip_prefix(root).unwrap().to_path_buf();
    let names_a: Vec<_> = fa.iter().map(|p| rel(p, a.path())).collect();
    let names_b: Vec<_> = files(b.path()).iter().map(|p| rel(p, b.path())).collect();
    check(names_a == names_b, || "runs produced different file sets".into())?;
    for name in &names_a {
        let same = fs::read(a.path().join(name)).unwrap() == fs::read(b.path().join(name)).unwrap();
        check(same, || format!("{} differs between runs", name.display()))?;
    }
    Ok(format!("12 invocations repeated, {} output files byte-identical", names_a.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("time overhead arithmetic", c1_time_overhead),
        ("proportional extrapolation", c2_extrapolation),
        ("sqrt-linear growth of published totals", c3_sqrt_linearity),
        ("convergence to shortest paths", c4_convergence),
        ("cross entries equal the Solution A formula", c5_formula_identity),
        ("ME accounting identity", c6_me_identity),
        ("exact partition vs enumeration", c7_exact_oracle),
        ("heuristic within 1.2x of optimum", c8_heuristic_quality),
        ("scenario ordering effect", c9_ordering_effect),
        ("partition quality trend", c10_partition_trend),
        ("determinism", c11_determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("PASS criterion {:>2} {name} ({secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {:>2} {name} ({secs:.1}s): {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
