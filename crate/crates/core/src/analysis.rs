//! Distribution-overhead formulas and report assembly.
//!
//! For a partition `V = V_0 ∪ V_1` and per-router modification counts
//! `me(v)`:
//!
//! * Solution A sends every update crossing the cut between logical
//!   processes: `Σ_i Σ_{v ∈ V_i} |N_{V \ V_i}(v)| · me(v)` entries.
//! * Solution B duplicates boundary routers and synchronizes the copies:
//!   `Σ_i Σ_{v ∈ V_i} (Σ_j e(v, V_j)) · me(v)` internal updates, each
//!   announced with a message carrying two router identifiers, plus
//!   `|V| · Σ_i Σ_{v ∈ V_i} Σ_j e(v, V_j)` bits to store the duplicates.
//!
//! Time overhead charges one packet per transmitted entry.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bgp::{Scenario, TraceStats};
use crate::partition::{Bipartition, Objective};
use crate::topology::{boundary_indicator, external_neighbors, Graph};

/// Mean per-packet latency between logical processes, in seconds.
pub const DEFAULT_PACKET_LATENCY: f64 = 0.26e-3;
/// Size of one router identifier in a synchronization message.
pub const DEFAULT_ID_BYTES: u64 = 8;
pub const DEFAULT_TARGETS: [u64; 2] = [10_000, 100_000];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("inconsistent input: {0}")]
    Consistency(String),
}

/// Solution A inter-LP entries.
pub fn comm_entries_a(graph: &Graph, part: &Bipartition, me: &[u64]) -> u64 {
    (0..2u8)
        .map(|i| {
            let block = part.block(i);
            graph
                .nodes()
                .filter(|&v| block.contains(v))
                .map(|v| external_neighbors(graph, v, &block) * me[v as usize])
                .sum::<u64>()
        })
        .sum()
}

/// Number of block duplications `Σ_j e(v, V_j)` for every vertex.
fn duplications(graph: &Graph, part: &Bipartition) -> Vec<u64> {
    let blocks = [part.block(0), part.block(1)];
    graph.nodes().map(|v| blocks.iter().map(|b| boundary_indicator(graph, v, b)).sum()).collect()
}

/// Solution B internal synchronization updates.
pub fn internal_updates_b(graph: &Graph, part: &Bipartition, me: &[u64]) -> u64 {
    duplications(graph, part).iter().zip(me).map(|(d, m)| d * m).sum()
}

/// Messages and bytes for Solution B: one message per internal update,
/// each carrying two router identifiers.
pub fn sync_traffic_b(internal_updates: u64, id_bytes: u64) -> (u64, u64) {
    (internal_updates, internal_updates * 2 * id_bytes)
}

/// Solution B memory overhead in bits: `|V|` per duplicated boundary vertex.
pub fn mem_overhead_b(graph: &Graph, part: &Bipartition) -> u64 {
    graph.node_count() as u64 * duplications(graph, part).iter().sum::<u64>()
}

/// Routing-table memory `k · n²` for `n` routers with entries of size `k`.
pub fn rt_memory(n: u64, k: u64) -> u128 {
    k as u128 * n as u128 * n as u128
}

/// Entries measured on directed edges crossing the cut.
pub fn measured_cross_entries(trace: &TraceStats, part: &Bipartition) -> Result<u64, AnalysisError> {
    if trace.node_count() != part.node_count() {
        return Err(AnalysisError::Consistency(format!(
            "trace covers {} nodes, partition {}",
            trace.node_count(),
            part.node_count()
        )));
    }
    Ok(trace.edges.iter().filter(|e| part.is_cut(e.from, e.to)).map(|e| e.entries).sum())
}

/// Seconds to transmit `entries` entries, one packet each.
pub fn time_overhead(entries: f64, per_packet_latency: f64) -> f64 {
    entries * per_packet_latency
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthModel {
    /// Scales the largest-n measurement linearly with n.
    Proportional,
    /// Least-squares line through `sqrt(value)` against n, squared back.
    SqrtLinear,
}

impl GrowthModel {
    pub fn label(self) -> &'static str {
        match self {
            GrowthModel::Proportional => "proportional",
            GrowthModel::SqrtLinear => "sqrt_linear",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub model: GrowthModel,
    pub target_n: f64,
    pub value: f64,
    /// Fit quality of the sqrt-linear regression.
    pub r_squared: Option<f64>,
}

/// Fits `sqrt(value) = intercept + slope · n`; returns `(intercept, slope, r²)`.
pub fn sqrt_linear_fit(points: &[(f64, f64)]) -> Result<(f64, f64, f64), AnalysisError> {
    if points.len() < 2 {
        return Err(AnalysisError::Parameter("sqrt_linear needs at least two measurements".into()));
    }
    if points.iter().any(|&(_, y)| y.is_nan() || y < 0.0) {
        return Err(AnalysisError::Parameter("values must be non-negative".into()));
    }
    let k = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.sqrt()).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(AnalysisError::Parameter("measurements need at least two distinct sizes".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok((intercept, slope, r2))
}

pub fn extrapolate(
    measurements: &[(f64, f64)],
    target_n: f64,
    model: GrowthModel,
) -> Result<Extrapolation, AnalysisError> {
    if target_n.is_nan() || target_n <= 0.0 {
        return Err(AnalysisError::Parameter(format!("target size must be positive, got {target_n}")));
    }
    match model {
        GrowthModel::Proportional => {
            let &(n, value) = measurements
                .iter()
                .max_by(|a, b| a.0.total_cmp(&b.0))
                .ok_or_else(|| AnalysisError::Parameter("no measurements".into()))?;
            if n.is_nan() || n <= 0.0 {
                return Err(AnalysisError::Parameter("measured size must be positive".into()));
            }
            Ok(Extrapolation { model, target_n, value: value * target_n / n, r_squared: None })
        }
        GrowthModel::SqrtLinear => {
            let (a, b, r2) = sqrt_linear_fit(measurements)?;
            Ok(Extrapolation { model, target_n, value: (a + b * target_n).powi(2), r_squared: Some(r2) })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    /// Seconds per transmitted entry.
    pub per_packet_latency: f64,
    pub id_bytes: u64,
    /// Routing-entry size `k` for the `k · n²` memory estimate.
    pub entry_size: u64,
    pub targets: Vec<u64>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            per_packet_latency: DEFAULT_PACKET_LATENCY,
            id_bytes: DEFAULT_ID_BYTES,
            entry_size: 1,
            targets: DEFAULT_TARGETS.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolatedOverhead {
    pub target_n: u64,
    pub model: GrowthModel,
    pub entries: f64,
    pub seconds: f64,
    pub r_squared: Option<f64>,
}

/// Evaluated overhead figures for one topology and scenario. Fields that
/// need a partition are `None` when none was supplied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverheadReport {
    pub n: u64,
    pub total_entries: u64,
    pub total_updates: Option<u64>,
    pub avg_entries_per_update: Option<f64>,
    pub comm_entries_a: Option<u64>,
    pub measured_cross_entries: Option<u64>,
    pub cross_fraction: Option<f64>,
    pub internal_updates_b: Option<u64>,
    pub fraction_b: Option<f64>,
    pub sync_messages_b: Option<u64>,
    pub sync_bytes_b: Option<u64>,
    pub mem_overhead_b_bits: Option<u64>,
    pub per_packet_latency: f64,
    /// Time to ship the Solution A cross entries.
    pub time_overhead: Option<f64>,
    /// Time to ship the Solution B synchronization messages.
    pub time_overhead_b: Option<f64>,
    pub extrapolations: Vec<ExtrapolatedOverhead>,
    pub rt_memory_estimate: u128,
}

fn ratio(part: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        part as f64 / total as f64
    }
}

impl OverheadReport {
    /// Builds a report from raw counts. `cross_entries` is the Solution A
    /// transmitted count and drives the time overhead and its proportional
    /// extrapolation.
    pub fn from_counts(
        n: u64,
        total_entries: u64,
        cross_entries: Option<u64>,
        internal_updates_b: Option<u64>,
        opts: &AnalysisOptions,
    ) -> Result<Self, AnalysisError> {
        if opts.per_packet_latency.is_nan() || opts.per_packet_latency < 0.0 {
            return Err(AnalysisError::Parameter("latency must be non-negative".into()));
        }
        if n == 0 {
            return Err(AnalysisError::Parameter("topology size must be positive".into()));
        }
        let time_a = cross_entries.map(|c| time_overhead(c as f64, opts.per_packet_latency));
        let mut extrapolations = Vec::new();
        if let Some(c) = cross_entries {
            for &target in &opts.targets {
                let e = extrapolate(&[(n as f64, c as f64)], target as f64, GrowthModel::Proportional)?;
                extrapolations.push(ExtrapolatedOverhead {
                    target_n: target,
                    model: e.model,
                    entries: e.value,
                    seconds: time_overhead(e.value, opts.per_packet_latency),
                    r_squared: None,
                });
            }
        }
        let sync = internal_updates_b.map(|b| sync_traffic_b(b, opts.id_bytes));
        Ok(Self {
            n,
            total_entries,
            total_updates: None,
            avg_entries_per_update: None,
            comm_entries_a: None,
            measured_cross_entries: cross_entries,
            cross_fraction: cross_entries.map(|c| ratio(c, total_entries)),
            internal_updates_b,
            fraction_b: internal_updates_b.map(|b| ratio(b, total_entries)),
            sync_messages_b: sync.map(|s| s.0),
            sync_bytes_b: sync.map(|s| s.1),
            mem_overhead_b_bits: None,
            per_packet_latency: opts.per_packet_latency,
            time_overhead: time_a,
            time_overhead_b: internal_updates_b.map(|b| time_overhead(b as f64, opts.per_packet_latency)),
            extrapolations,
            rt_memory_estimate: rt_memory(n, opts.entry_size),
        })
    }

    /// Evaluates a simulated trace against the Solution A partition and the
    /// Solution B partition (either may be absent).
    pub fn evaluate(
        graph: &Graph,
        trace: &TraceStats,
        part_a: Option<&Bipartition>,
        part_b: Option<&Bipartition>,
        opts: &AnalysisOptions,
    ) -> Result<Self, AnalysisError> {
        let n = graph.node_count();
        if trace.node_count() != n {
            return Err(AnalysisError::Consistency(format!(
                "trace covers {} nodes, graph has {n}",
                trace.node_count()
            )));
        }
        for p in part_a.iter().chain(part_b.iter()) {
            if p.node_count() != n {
                return Err(AnalysisError::Consistency(format!(
                    "partition covers {} nodes, graph has {n}",
                    p.node_count()
                )));
            }
        }
        let cross = part_a.map(|p| measured_cross_entries(trace, p)).transpose()?;
        let internal = part_b.map(|p| internal_updates_b(graph, p, &trace.me));
        let mut report = Self::from_counts(n as u64, trace.total_entries, cross, internal, opts)?;
        report.total_updates = Some(trace.total_updates);
        report.avg_entries_per_update = Some(trace.avg_entries_per_update);
        report.comm_entries_a = part_a.map(|p| comm_entries_a(graph, p, &trace.me));
        report.mem_overhead_b_bits = part_b.map(|p| mem_overhead_b(graph, p));
        Ok(report)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    NoPartition,
    SolA,
    SolB,
}

impl RowKind {
    pub fn label(self) -> &'static str {
        match self {
            RowKind::NoPartition => "No partition",
            RowKind::SolA => "Sol A on bipartition",
            RowKind::SolB => "Sol B on bipartition",
        }
    }
}

/// One measured (topology, scenario) combination feeding the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportInput {
    pub n: u64,
    pub scenario: Scenario,
    pub overhead: OverheadReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub scenario: Scenario,
    pub kind: RowKind,
    /// One cell per entry of [`Report::sizes`].
    pub cells: Vec<Option<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub scenario: Scenario,
    pub kind: RowKind,
    pub r_squared: f64,
    pub extrapolations: Vec<Extrapolation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub sizes: Vec<u64>,
    pub rows: Vec<TableRow>,
    pub overheads: Vec<ReportInput>,
    /// Sqrt-linear fits over sizes, for rows with at least two distinct sizes.
    pub fits: Vec<FitRow>,
    pub options: AnalysisOptions,
}

/// Assembles the entries table (scenario blocks × {no partition, Sol A,
/// Sol B}, one column per topology size) plus per-cell overheads and
/// growth fits.
pub fn report(inputs: &[ReportInput], opts: &AnalysisOptions) -> Report {
    let mut sizes: Vec<u64> = inputs.iter().map(|i| i.n).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let mut scenarios: Vec<Scenario> = inputs.iter().map(|i| i.scenario).collect();
    scenarios.sort_by_key(|s| s.number());
    scenarios.dedup();

    let mut cells: BTreeMap<(u8, RowKind, u64), u64> = BTreeMap::new();
    for i in inputs {
        let s = i.scenario.number();
        cells.insert((s, RowKind::NoPartition, i.n), i.overhead.total_entries);
        if let Some(a) = i.overhead.measured_cross_entries {
            cells.insert((s, RowKind::SolA, i.n), a);
        }
        if let Some(b) = i.overhead.internal_updates_b {
            cells.insert((s, RowKind::SolB, i.n), b);
        }
    }

    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for &scenario in &scenarios {
        for kind in [RowKind::NoPartition, RowKind::SolA, RowKind::SolB] {
            let row: Vec<Option<u64>> =
                sizes.iter().map(|&n| cells.get(&(scenario.number(), kind, n)).copied()).collect();
            if row.iter().all(Option::is_none) {
                continue;
            }
            let points: Vec<(f64, f64)> =
                sizes.iter().zip(&row).filter_map(|(&n, c)| Some((n as f64, (*c)? as f64))).collect();
            if let Ok((_, _, r2)) = sqrt_linear_fit(&points) {
                let extrapolations = opts
                    .targets
                    .iter()
                    .flat_map(|&t| {
                        [GrowthModel::SqrtLinear, GrowthModel::Proportional]
                            .map(|m| extrapolate(&points, t as f64, m).expect("fit succeeded"))
                    })
                    .collect();
                fits.push(FitRow { scenario, kind, r_squared: r2, extrapolations });
            }
            rows.push(TableRow { scenario, kind, cells: row });
        }
    }
    Report { sizes, rows, overheads: inputs.to_vec(), fits, options: opts.clone() }
}

/// Objective to use for each row of the table.
pub fn row_objective(kind: RowKind) -> Option<Objective> {
    match kind {
        RowKind::NoPartition => None,
        RowKind::SolA => Some(Objective::EdgeCut),
        RowKind::SolB => Some(Objective::VertexBoundary),
    }
}
