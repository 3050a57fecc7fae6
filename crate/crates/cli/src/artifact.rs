//! On-disk documents produced by each stage. Every document carries a
//! [`Meta`] block with the config digest and the seeds in effect; none
//! carries a timestamp, so reruns are byte-identical.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use bgpdist_core::analysis::{OverheadReport, Report};
use bgpdist_core::bgp::{EventCounts, Scenario, ScenarioConfig, TraceStats};
use bgpdist_core::partition::{Bipartition, Objective};
use bgpdist_core::topology::{format_edgelist, parse_edgelist, Graph};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, WeightSource};
use crate::digest::{graph_digest, sha256_hex};
use crate::error::CliError;

pub const TOOL: &str = concat!("bgpdist ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub kind: String,
    pub config_digest: String,
    /// Digest of the settings this stage depends on, plus its inputs.
    pub stage_digest: String,
    pub seeds: BTreeMap<String, u64>,
    /// Input name to content digest.
    pub inputs: BTreeMap<String, String>,
}

impl Meta {
    pub fn new(kind: &str, config: &RunConfig, stage: &impl Serialize, inputs: BTreeMap<String, String>) -> Self {
        let stage_json = serde_json::to_string(&(kind, stage, &inputs)).expect("stage serializes");
        Self {
            tool: TOOL.to_string(),
            kind: kind.to_string(),
            config_digest: config.digest(),
            stage_digest: sha256_hex(stage_json.as_bytes()),
            seeds: config.seeds(),
            inputs,
        }
    }
}

/// Writes through a temporary sibling and a rename, so an interrupted run
/// never leaves a truncated artifact behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

/// Writes pretty JSON and returns the digest of the bytes written.
pub fn write_json<T: Serialize>(path: &Path, doc: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(doc).expect("document serializes");
    text.push('\n');
    write_atomic(path, text.as_bytes())?;
    Ok(sha256_hex(text.as_bytes()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<(T, String), CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let doc = serde_json::from_slice(&bytes).map_err(|e| CliError::malformed(path, e))?;
    Ok((doc, sha256_hex(&bytes)))
}

/// `#` lines opening every CSV table: tool, digests and seeds.
fn csv_preamble(meta: &Meta) -> Vec<u8> {
    let seeds: Vec<String> = meta.seeds.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!(
        "# tool {}\n# config_digest {}\n# stage_digest {}\n# seeds {}\n",
        meta.tool,
        meta.config_digest,
        meta.stage_digest,
        seeds.join(" ")
    )
    .into_bytes()
}

pub fn write_csv<S: Serialize>(path: &Path, meta: &Meta, rows: impl IntoIterator<Item = S>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(csv_preamble(meta));
    for row in rows {
        w.serialize(row).map_err(|e| CliError::malformed(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::malformed(path, e))?;
    write_atomic(path, &bytes)
}

/// `dir/name.json` becomes `dir/name.suffix`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

pub struct GraphFile {
    pub graph: Graph,
    pub digest: String,
}

pub fn write_graph(path: &Path, graph: &Graph, meta: &Meta) -> Result<String, CliError> {
    let digest = graph_digest(graph);
    let mut header = vec![
        format!("tool {}", meta.tool),
        format!("graph_digest {digest}"),
        format!("config_digest {}", meta.config_digest),
        format!("stage_digest {}", meta.stage_digest),
    ];
    header.extend(meta.seeds.iter().map(|(k, v)| format!("seed {k} {v}")));
    write_atomic(path, format_edgelist(graph, &header).as_bytes())?;
    Ok(digest)
}

pub fn read_graph(path: &Path) -> Result<GraphFile, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let graph = parse_edgelist(&text).map_err(|e| CliError::malformed(path, e))?;
    let digest = graph_digest(&graph);
    Ok(GraphFile { graph, digest })
}

/// The `stage_digest` header line of a graph file, if any.
pub fn graph_stage_digest(path: &Path) -> Option<String> {
    let text = fs::read_to_string(path).ok()?;
    text.lines().take_while(|l| l.starts_with('#')).find_map(|l| l.strip_prefix("# stage_digest ").map(str::to_string))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceDoc {
    pub meta: Meta,
    pub graph_digest: String,
    pub scenario: ScenarioConfig,
    pub events: EventCounts,
    pub trace: TraceStats,
}

#[derive(Debug, Serialize)]
pub struct NodeRow {
    pub node: u32,
    pub degree: usize,
    pub me: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionDoc {
    pub meta: Meta,
    pub graph_digest: String,
    pub objective: Objective,
    pub weights: WeightSource,
    /// `exact` or `heuristic`.
    pub solver: String,
    /// Set when a partition computed for another objective scored better
    /// and was kept instead.
    pub reused_from: Option<Objective>,
    pub epsilon: f64,
    pub cost: u64,
    pub unconstrained_cost: Option<u64>,
    pub sizes: [usize; 2],
    pub side: Vec<u8>,
}

impl PartitionDoc {
    pub fn bipartition(&self) -> Bipartition {
        Bipartition::new(self.side.clone(), self.epsilon)
    }
}

#[derive(Debug, Serialize)]
pub struct SideRow {
    pub node: usize,
    pub side: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverheadDoc {
    pub meta: Meta,
    /// `trace` or `override`.
    pub source: String,
    pub graph_digest: Option<String>,
    pub scenario: Scenario,
    pub overhead: OverheadReport,
}

#[derive(Debug, Serialize)]
pub struct MetricRow {
    pub metric: &'static str,
    pub value: String,
    pub unit: &'static str,
    pub target_n: Option<u64>,
    pub model: Option<&'static str>,
}

impl MetricRow {
    fn new(metric: &'static str, value: String, unit: &'static str) -> Self {
        Self { metric, value, unit, target_n: None, model: None }
    }
}

impl OverheadDoc {
    pub fn metric_rows(&self) -> Vec<MetricRow> {
        let o = &self.overhead;
        let opt = |v: Option<u64>| v.map_or_else(String::new, |v| v.to_string());
        let optf = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
        let mut rows = vec![
            MetricRow::new("n", o.n.to_string(), "routers"),
            MetricRow::new("total_entries", o.total_entries.to_string(), "entries"),
            MetricRow::new("total_updates", opt(o.total_updates), "updates"),
            MetricRow::new("avg_entries_per_update", optf(o.avg_entries_per_update), "entries"),
            MetricRow::new("comm_entries_a", opt(o.comm_entries_a), "entries"),
            MetricRow::new("measured_cross_entries", opt(o.measured_cross_entries), "entries"),
            MetricRow::new("cross_fraction", optf(o.cross_fraction), "ratio"),
            MetricRow::new("internal_updates_b", opt(o.internal_updates_b), "updates"),
            MetricRow::new("fraction_b", optf(o.fraction_b), "ratio"),
            MetricRow::new("sync_messages_b", opt(o.sync_messages_b), "messages"),
            MetricRow::new("sync_bytes_b", opt(o.sync_bytes_b), "bytes"),
            MetricRow::new("mem_overhead_b", opt(o.mem_overhead_b_bits), "bits"),
            MetricRow::new("per_packet_latency", o.per_packet_latency.to_string(), "s"),
            MetricRow::new("time_overhead", optf(o.time_overhead), "s"),
            MetricRow::new("time_overhead_b", optf(o.time_overhead_b), "s"),
            MetricRow::new("rt_memory_estimate", o.rt_memory_estimate.to_string(), "entries"),
        ];
        for e in &o.extrapolations {
            let at = |row: MetricRow| MetricRow { target_n: Some(e.target_n), model: Some(e.model.label()), ..row };
            rows.push(at(MetricRow::new("extrapolated_entries", e.entries.to_string(), "entries")));
            rows.push(at(MetricRow::new("extrapolated_time", e.seconds.to_string(), "s")));
        }
        rows
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub meta: Meta,
    pub report: Report,
}

impl ReportDoc {
    /// The entries table as CSV records: a header row, then one row per
    /// (scenario, row kind) with one cell per topology size.
    pub fn table_records(&self) -> Vec<Vec<String>> {
        let r = &self.report;
        let mut head = vec!["scenario".to_string(), "row".to_string()];
        head.extend(r.sizes.iter().map(|n| format!("n={n}")));
        let mut out = vec![head];
        for row in &r.rows {
            let mut rec = vec![row.scenario.number().to_string(), row.kind.label().to_string()];
            rec.extend(row.cells.iter().map(|c| c.map_or_else(String::new, |c| c.to_string())));
            out.push(rec);
        }
        out
    }

    pub fn overhead_records(&self) -> Vec<Vec<String>> {
        let head = [
            "n",
            "scenario",
            "total_entries",
            "cross_entries_a",
            "cross_fraction",
            "internal_updates_b",
            "fraction_b",
            "time_overhead_s",
            "time_overhead_b_s",
        ];
        let mut out = vec![head.iter().map(|s| s.to_string()).collect::<Vec<_>>()];
        let f = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
        let u = |v: Option<u64>| v.map_or_else(String::new, |v| v.to_string());
        for i in &self.report.overheads {
            let o = &i.overhead;
            out.push(vec![
                i.n.to_string(),
                i.scenario.number().to_string(),
                o.total_entries.to_string(),
                u(o.measured_cross_entries),
                f(o.cross_fraction),
                u(o.internal_updates_b),
                f(o.fraction_b),
                f(o.time_overhead),
                f(o.time_overhead_b),
            ]);
        }
        out
    }

    pub fn fit_records(&self) -> Vec<Vec<String>> {
        let mut out = vec![["scenario", "row", "r_squared", "model", "target_n", "entries", "time_overhead_s"]
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()];
        let latency = self.report.options.per_packet_latency;
        for fit in &self.report.fits {
            for e in &fit.extrapolations {
                out.push(vec![
                    fit.scenario.number().to_string(),
                    fit.kind.label().to_string(),
                    fit.r_squared.to_string(),
                    e.model.label().to_string(),
                    e.target_n.to_string(),
                    e.value.to_string(),
                    (e.value * latency).to_string(),
                ]);
            }
        }
        out
    }
}

pub fn write_records(path: &Path, meta: &Meta, records: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(csv_preamble(meta));
    for rec in records {
        w.write_record(rec).map_err(|e| CliError::malformed(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::malformed(path, e))?;
    write_atomic(path, &bytes)
}
