use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use bgpdist_core::analysis::{report, OverheadReport, ReportInput};
use bgpdist_core::bgp::{run_scenario, Scenario, ScenarioConfig};
use bgpdist_core::partition::{
    exact_bipartition, heuristic_bipartition, objective, weights_from_trace, HeuristicOptions, Objective, WeightSpec,
};
use bgpdist_core::topology::{glp_generate, load_edgelist, Graph};
use rayon::prelude::*;
use serde::Serialize;

use crate::artifact::*;
use crate::config::{RunConfig, SolverMode, WeightSource};
use crate::digest::sha256_hex;
use crate::error::CliError;

fn inputs<const N: usize>(pairs: [(&str, &str); N]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

fn objective_tag(obj: Objective) -> &'static str {
    match obj {
        Objective::EdgeCut => "A",
        Objective::VertexBoundary => "B",
    }
}

/// Generates the configured GLP topology, or loads the configured edge list.
fn build_topology(cfg: &RunConfig) -> Result<(Graph, BTreeMap<String, String>), CliError> {
    match &cfg.topology.edgelist {
        Some(path) => {
            let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
            let graph = load_edgelist(path).map_err(|e| CliError::malformed(path, e))?;
            Ok((graph, inputs([("edgelist", &sha256_hex(&bytes))])))
        }
        None => Ok((glp_generate(&cfg.topology.glp(), cfg.topology.seed)?, BTreeMap::new())),
    }
}

pub fn graph_meta(cfg: &RunConfig, inputs: BTreeMap<String, String>) -> Meta {
    Meta::new("graph", cfg, &cfg.topology, inputs)
}

pub fn cmd_gen(cfg: &RunConfig, out: &Path) -> Result<GraphFile, CliError> {
    cfg.validate()?;
    let (graph, inputs) = build_topology(cfg)?;
    let digest = write_graph(out, &graph, &graph_meta(cfg, inputs))?;
    Ok(GraphFile { graph, digest })
}

pub fn scenario_config(cfg: &RunConfig, scenario: Scenario) -> ScenarioConfig {
    let s = &cfg.simulation;
    ScenarioConfig { scenario, mrai: s.mrai, seed: s.seed, session_order: s.session_order, event_cap: s.event_cap }
}

pub fn simulate(cfg: &RunConfig, graph: &GraphFile, scenario: Scenario) -> Result<TraceDoc, CliError> {
    let sc = scenario_config(cfg, scenario);
    let meta = Meta::new("trace", cfg, &sc, inputs([("graph", &graph.digest)]));
    let run = run_scenario(&graph.graph, &sc)?;
    Ok(TraceDoc { meta, graph_digest: graph.digest.clone(), scenario: sc, events: run.events, trace: run.trace })
}

/// Writes the trace document plus per-edge and per-node CSV tables;
/// returns the document digest.
pub fn write_trace(path: &Path, doc: &TraceDoc, graph: &Graph) -> Result<String, CliError> {
    write_csv(&sibling(path, "edges.csv"), &doc.meta, &doc.trace.edges)?;
    let nodes = graph.nodes().map(|v| NodeRow { node: v, degree: graph.degree(v), me: doc.trace.me[v as usize] });
    write_csv(&sibling(path, "nodes.csv"), &doc.meta, nodes)?;
    write_json(path, doc)
}

pub fn cmd_sim(cfg: &RunConfig, graph_path: &Path, scenario: Scenario, out: &Path) -> Result<TraceDoc, CliError> {
    cfg.validate()?;
    let graph = read_graph(graph_path)?;
    let doc = simulate(cfg, &graph, scenario)?;
    write_trace(out, &doc, &graph.graph)?;
    Ok(doc)
}

fn check_graph(what: &str, found: &str, graph: &GraphFile) -> Result<(), CliError> {
    if found != graph.digest {
        return Err(CliError::Consistency(format!(
            "{what} was computed on graph {found}, but the supplied graph is {}",
            graph.digest
        )));
    }
    Ok(())
}

fn partition_weights(cfg: &RunConfig, graph: &GraphFile, trace: Option<&TraceDoc>) -> Result<WeightSpec, CliError> {
    match (cfg.partition.weights, trace) {
        (WeightSource::Uniform, _) => Ok(WeightSpec::uniform(&graph.graph, 1, 1)),
        (WeightSource::Trace, Some(t)) => {
            check_graph("trace", &t.graph_digest, graph)?;
            Ok(weights_from_trace(&t.trace, &graph.graph)?)
        }
        (WeightSource::Trace, None) => {
            Err(CliError::Usage("trace weights need a trace; pass one or use uniform weights".into()))
        }
    }
}

#[derive(Serialize)]
struct PartitionStage<'a> {
    objective: Objective,
    settings: &'a crate::config::PartitionConfig,
}

fn partition_meta(cfg: &RunConfig, graph: &GraphFile, trace_digest: Option<&str>, obj: Objective) -> Meta {
    let mut input_digests = inputs([("graph", &graph.digest)]);
    if let (WeightSource::Trace, Some(digest)) = (cfg.partition.weights, trace_digest) {
        input_digests.insert("trace".into(), digest.to_string());
    }
    Meta::new("partition", cfg, &PartitionStage { objective: obj, settings: &cfg.partition }, input_digests)
}

/// Solves one objective on `graph` with weights taken from `trace` (or unit
/// weights), per the partition settings.
pub fn partition(
    cfg: &RunConfig,
    graph: &GraphFile,
    trace: Option<(&TraceDoc, &str)>,
    obj: Objective,
) -> Result<PartitionDoc, CliError> {
    let p = &cfg.partition;
    let weights = partition_weights(cfg, graph, trace.map(|t| t.0))?;
    let meta = partition_meta(cfg, graph, trace.map(|t| t.1), obj);
    let n = graph.graph.node_count();
    let exact = match p.mode {
        SolverMode::Exact => true,
        SolverMode::Heuristic => false,
        SolverMode::Auto => n <= p.exact_limit,
    };
    let (part, cost, unconstrained_cost, solver) = if exact {
        let sol = exact_bipartition(&graph.graph, &weights, obj, p.epsilon, p.exact_limit)?;
        (sol.partition, sol.cost, Some(sol.unconstrained_cost), "exact")
    } else {
        let opts = HeuristicOptions { restarts: p.restarts, seed: p.seed, max_passes: p.max_passes };
        let part = heuristic_bipartition(&graph.graph, &weights, obj, p.epsilon, &opts)?;
        let cost = objective(&graph.graph, &weights, &part, obj);
        (part, cost, None, "heuristic")
    };
    Ok(PartitionDoc {
        meta,
        graph_digest: graph.digest.clone(),
        objective: obj,
        weights: p.weights,
        solver: solver.to_string(),
        reused_from: None,
        epsilon: p.epsilon,
        cost,
        unconstrained_cost,
        sizes: part.sizes(),
        side: part.side,
    })
}

/// Keeps `other`'s split for `doc`'s objective when it scores strictly
/// better there. Heuristic searches for the two objectives are independent,
/// so the edge-cut optimum occasionally beats the boundary search on the
/// boundary objective.
pub fn adopt_if_better(
    cfg: &RunConfig,
    graph: &GraphFile,
    trace: Option<&TraceDoc>,
    mut doc: PartitionDoc,
    other: &PartitionDoc,
) -> Result<PartitionDoc, CliError> {
    let weights = partition_weights(cfg, graph, trace)?;
    let candidate = objective(&graph.graph, &weights, &other.bipartition(), doc.objective);
    if candidate < doc.cost && other.bipartition().validate(&graph.graph).is_ok() {
        doc.cost = candidate;
        doc.side = other.side.clone();
        doc.sizes = other.sizes;
        doc.reused_from = Some(other.objective);
    }
    Ok(doc)
}

pub fn write_partition(path: &Path, doc: &PartitionDoc) -> Result<String, CliError> {
    write_csv(
        &sibling(path, "csv"),
        &doc.meta,
        doc.side.iter().enumerate().map(|(node, &side)| SideRow { node, side }),
    )?;
    write_json(path, doc)
}

pub fn cmd_partition(
    cfg: &RunConfig,
    graph_path: &Path,
    trace_path: Option<&Path>,
    obj: Objective,
    out: &Path,
) -> Result<PartitionDoc, CliError> {
    cfg.validate()?;
    let graph = read_graph(graph_path)?;
    let trace: Option<(TraceDoc, String)> = trace_path.map(read_json).transpose()?;
    let doc = partition(cfg, &graph, trace.as_ref().map(|(t, d)| (t, d.as_str())), obj)?;
    write_partition(out, &doc)?;
    Ok(doc)
}

/// Published or externally measured counts fed straight into the analysis.
#[derive(Debug, Clone, Serialize)]
pub struct CountsOverride {
    pub n: u64,
    pub scenario: Scenario,
    /// Solution A transmitted entries; drives the time overhead.
    pub entries: u64,
    pub total_entries: Option<u64>,
    pub internal_updates_b: Option<u64>,
}

pub fn analyze_counts(cfg: &RunConfig, counts: &CountsOverride) -> Result<OverheadDoc, CliError> {
    let opts = cfg.analysis.options();
    let total = counts.total_entries.unwrap_or(counts.entries);
    if counts.total_entries.is_some_and(|t| t < counts.entries) {
        return Err(CliError::Consistency("cross entries exceed total entries".into()));
    }
    let mut overhead =
        OverheadReport::from_counts(counts.n, total, Some(counts.entries), counts.internal_updates_b, &opts)?;
    if counts.total_entries.is_none() {
        overhead.cross_fraction = None;
        overhead.fraction_b = None;
    }
    let meta = Meta::new("overhead", cfg, &(counts, &cfg.analysis), BTreeMap::new());
    Ok(OverheadDoc { meta, source: "override".into(), graph_digest: None, scenario: counts.scenario, overhead })
}

pub fn analyze(
    cfg: &RunConfig,
    graph: &GraphFile,
    trace: (&TraceDoc, &str),
    part_a: Option<(&PartitionDoc, &str)>,
    part_b: Option<(&PartitionDoc, &str)>,
) -> Result<OverheadDoc, CliError> {
    check_graph("trace", &trace.0.graph_digest, graph)?;
    let mut input_digests = inputs([("graph", &graph.digest), ("trace", trace.1)]);
    let mut parts = [None, None];
    for (slot, (name, part)) in [("partition_a", part_a), ("partition_b", part_b)].into_iter().enumerate() {
        if let Some((doc, digest)) = part {
            check_graph(name, &doc.graph_digest, graph)?;
            let bp = doc.bipartition();
            bp.validate(&graph.graph)?;
            input_digests.insert(name.to_string(), digest.to_string());
            parts[slot] = Some(bp);
        }
    }
    let overhead = OverheadReport::evaluate(
        &graph.graph,
        &trace.0.trace,
        parts[0].as_ref(),
        parts[1].as_ref(),
        &cfg.analysis.options(),
    )?;
    let meta = Meta::new("overhead", cfg, &cfg.analysis, input_digests);
    Ok(OverheadDoc {
        meta,
        source: "trace".into(),
        graph_digest: Some(graph.digest.clone()),
        scenario: trace.0.scenario.scenario,
        overhead,
    })
}

pub fn write_overhead(path: &Path, doc: &OverheadDoc) -> Result<String, CliError> {
    write_csv(&sibling(path, "csv"), &doc.meta, doc.metric_rows())?;
    write_json(path, doc)
}

pub enum AnalyzeInput<'a> {
    Files { graph: &'a Path, trace: &'a Path, partition_a: Option<&'a Path>, partition_b: Option<&'a Path> },
    Counts(CountsOverride),
}

fn doc_ref(p: &Option<(PartitionDoc, String)>) -> Option<(&PartitionDoc, &str)> {
    p.as_ref().map(|(d, s)| (d, s.as_str()))
}

pub fn cmd_analyze(cfg: &RunConfig, input: AnalyzeInput<'_>, out: &Path) -> Result<OverheadDoc, CliError> {
    cfg.validate()?;
    let doc = match input {
        AnalyzeInput::Counts(c) => analyze_counts(cfg, &c)?,
        AnalyzeInput::Files { graph, trace, partition_a, partition_b } => {
            let graph = read_graph(graph)?;
            let trace: (TraceDoc, String) = read_json(trace)?;
            let pa: Option<(PartitionDoc, String)> = partition_a.map(read_json).transpose()?;
            let pb: Option<(PartitionDoc, String)> = partition_b.map(read_json).transpose()?;
            analyze(cfg, &graph, (&trace.0, &trace.1), doc_ref(&pa), doc_ref(&pb))?
        }
    };
    write_overhead(out, &doc)?;
    Ok(doc)
}

/// Combines overhead documents into the entries table. Each (size,
/// scenario) pair may appear once.
pub fn build_report(cfg: &RunConfig, docs: &[(OverheadDoc, String)]) -> Result<ReportDoc, CliError> {
    let mut seen = BTreeSet::new();
    let mut report_inputs = Vec::new();
    for (doc, _) in docs {
        let key = (doc.overhead.n, doc.scenario.number());
        if !seen.insert(key) {
            return Err(CliError::Consistency(format!("two inputs for n = {}, scenario {}", key.0, key.1)));
        }
        report_inputs.push(ReportInput { n: doc.overhead.n, scenario: doc.scenario, overhead: doc.overhead.clone() });
    }
    let digests = docs.iter().enumerate().map(|(i, (_, d))| (format!("overhead_{i}"), d.clone())).collect();
    let meta = Meta::new("report", cfg, &cfg.analysis, digests);
    Ok(ReportDoc { meta, report: report(&report_inputs, &cfg.analysis.options()) })
}

pub fn write_report(path: &Path, doc: &ReportDoc) -> Result<String, CliError> {
    write_records(&sibling(path, "table.csv"), &doc.meta, &doc.table_records())?;
    write_records(&sibling(path, "overheads.csv"), &doc.meta, &doc.overhead_records())?;
    write_records(&sibling(path, "fits.csv"), &doc.meta, &doc.fit_records())?;
    write_json(path, doc)
}

pub fn cmd_report(cfg: &RunConfig, input_paths: &[PathBuf], out: &Path) -> Result<ReportDoc, CliError> {
    cfg.validate()?;
    if input_paths.is_empty() {
        return Err(CliError::Usage("report needs at least one overhead document".into()));
    }
    let docs = input_paths.iter().map(|p| read_json(p)).collect::<Result<Vec<_>, _>>()?;
    let doc = build_report(cfg, &docs)?;
    write_report(out, &doc)?;
    Ok(doc)
}

/// What the pipeline did with each artifact.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct PipelineLog {
    pub written: Vec<PathBuf>,
    pub reused: Vec<PathBuf>,
}

fn reuse_json<T: serde::de::DeserializeOwned>(
    path: &Path,
    stage_digest: &str,
    meta: impl Fn(&T) -> &Meta,
) -> Option<(T, String)> {
    let (doc, digest) = read_json::<T>(path).ok()?;
    (meta(&doc).stage_digest == stage_digest).then_some((doc, digest))
}

/// gen, sim per scenario, partition per scenario and objective, analyze,
/// report. Every stage writes its own file; a stage whose file already
/// exists with a matching stage digest is loaded instead of recomputed.
pub fn cmd_pipeline(cfg: &RunConfig, dir: &Path) -> Result<(ReportDoc, PipelineLog), CliError> {
    cfg.validate()?;
    let mut log = PipelineLog::default();
    // Written without the output directory so run directories stay relocatable.
    let config_text = toml::to_string(&RunConfig { output_dir: None, ..cfg.clone() })
        .map_err(|e| CliError::Parameter(e.to_string()))?;
    write_atomic(&dir.join("config.toml"), config_text.as_bytes())?;

    let graph_path = dir.join("graph.txt");
    let (graph, input_digests) = match cfg.topology.edgelist {
        // Hashing the source file is cheap; generation may not be.
        Some(_) => build_topology(cfg).map(|(g, i)| (Some(g), i))?,
        None => (None, BTreeMap::new()),
    };
    let meta = graph_meta(cfg, input_digests);
    let graph = if graph_stage_digest(&graph_path).as_deref() == Some(&meta.stage_digest) {
        log.reused.push(graph_path.clone());
        read_graph(&graph_path)?
    } else {
        let graph = match graph {
            Some(g) => g,
            None => build_topology(cfg)?.0,
        };
        let digest = write_graph(&graph_path, &graph, &meta)?;
        log.written.push(graph_path.clone());
        GraphFile { graph, digest }
    };

    let scenarios: Vec<Scenario> = {
        let mut s = cfg.simulation.scenarios.clone();
        s.sort_by_key(|s| s.number());
        s.dedup();
        s
    };
    let traces = scenarios
        .par_iter()
        .map(|&s| {
            let path = dir.join(format!("trace_s{}.json", s.number()));
            let expected = Meta::new("trace", cfg, &scenario_config(cfg, s), inputs([("graph", &graph.digest)]));
            if let Some(found) = reuse_json::<TraceDoc>(&path, &expected.stage_digest, |d| &d.meta) {
                return Ok((path, found, false));
            }
            let doc = simulate(cfg, &graph, s)?;
            let digest = write_trace(&path, &doc, &graph.graph)?;
            Ok((path, (doc, digest), true))
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut overheads = Vec::new();
    for (&s, (path, (trace, trace_digest), fresh)) in scenarios.iter().zip(&traces) {
        if *fresh { &mut log.written } else { &mut log.reused }.push(path.clone());
        let mut parts: BTreeMap<&str, (PartitionDoc, String)> = BTreeMap::new();
        for &obj in &cfg.partition.objectives {
            let path = dir.join(format!("partition_s{}_{}.json", s.number(), objective_tag(obj)));
            let expected = partition_meta(cfg, &graph, Some(trace_digest), obj);
            if let Some(found) = reuse_json::<PartitionDoc>(&path, &expected.stage_digest, |d| &d.meta) {
                log.reused.push(path);
                parts.insert(objective_tag(obj), found);
                continue;
            }
            let mut doc = partition(cfg, &graph, Some((trace, trace_digest)), obj)?;
            if let (Objective::VertexBoundary, Some((a, _))) = (obj, parts.get("A")) {
                doc = adopt_if_better(cfg, &graph, Some(trace), doc, a)?;
            }
            let digest = write_partition(&path, &doc)?;
            log.written.push(path);
            parts.insert(objective_tag(obj), (doc, digest));
        }
        let part = |tag| parts.get(tag).map(|(d, s): &(PartitionDoc, String)| (d, s.as_str()));
        let doc = analyze(cfg, &graph, (trace, trace_digest), part("A"), part("B"))?;
        let path = dir.join(format!("overhead_s{}.json", s.number()));
        let digest = write_overhead(&path, &doc)?;
        log.written.push(path);
        overheads.push((doc, digest));
    }

    let report = build_report(cfg, &overheads)?;
    let path = dir.join("report.json");
    write_report(&path, &report)?;
    log.written.push(path);
    Ok((report, log))
}
