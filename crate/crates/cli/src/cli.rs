use std::ffi::OsString;
use std::path::PathBuf;

use bgpdist_core::bgp::{Scenario, SessionOrder};
use bgpdist_core::partition::Objective;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::*;
use crate::config::{RunConfig, SolverMode, WeightSource};
use crate::error::{CliError, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "bgpdist", version, about = "BGP simulation and partition overhead analysis")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a GLP topology and write it as an edge list.
    Gen(GenArgs),
    /// Run one BGP scenario to convergence and write its trace.
    Sim(SimArgs),
    /// Compute a balanced bipartition.
    Partition(PartitionArgs),
    /// Evaluate overhead formulas for one trace, or for given counts.
    Analyze(AnalyzeArgs),
    /// Merge overhead documents into the entries table.
    Report(ReportArgs),
    /// Run every stage into one directory.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct TopologyFlags {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub m_mean: Option<f64>,
    #[arg(long)]
    pub topology_seed: Option<u64>,
    /// Read this edge list instead of generating a topology.
    #[arg(long)]
    pub edgelist: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub topology: TopologyFlags,
    /// Alias for --topology-seed.
    #[arg(long, conflicts_with = "topology_seed")]
    pub seed: Option<u64>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OrderFlag {
    Canonical,
    Shuffled,
}

#[derive(Debug, Args)]
pub struct SimulationFlags {
    #[arg(long)]
    pub mrai: Option<u64>,
    #[arg(long)]
    pub sim_seed: Option<u64>,
    #[arg(long, value_enum)]
    pub session_order: Option<OrderFlag>,
    #[arg(long)]
    pub event_cap: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub scenario: u8,
    #[command(flatten)]
    pub simulation: SimulationFlags,
    /// Alias for --sim-seed.
    #[arg(long, conflicts_with = "sim_seed")]
    pub seed: Option<u64>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveFlag {
    /// Weighted edge cut.
    #[value(name = "A", alias = "a")]
    A,
    /// Weighted vertex boundary.
    #[value(name = "B", alias = "b")]
    B,
}

impl From<ObjectiveFlag> for Objective {
    fn from(o: ObjectiveFlag) -> Self {
        match o {
            ObjectiveFlag::A => Objective::EdgeCut,
            ObjectiveFlag::B => Objective::VertexBoundary,
        }
    }
}

#[derive(Debug, Args)]
pub struct PartitionFlags {
    #[arg(long, value_enum)]
    pub mode: Option<SolverMode>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub max_passes: Option<usize>,
    #[arg(long)]
    pub exact_limit: Option<usize>,
    #[arg(long)]
    pub partition_seed: Option<u64>,
    #[arg(long, value_enum)]
    pub weights: Option<WeightSource>,
}

#[derive(Debug, Args)]
pub struct PartitionArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Trace supplying edge and vertex weights.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub objective: ObjectiveFlag,
    #[command(flatten)]
    pub partition: PartitionFlags,
    /// Alias for --partition-seed.
    #[arg(long, conflicts_with = "partition_seed")]
    pub seed: Option<u64>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalysisFlags {
    /// Seconds per transmitted entry.
    #[arg(long)]
    pub latency: Option<f64>,
    #[arg(long)]
    pub id_bytes: Option<u64>,
    #[arg(long)]
    pub entry_size: Option<u64>,
    /// Extrapolation target size; repeatable.
    #[arg(long = "target")]
    pub targets: Vec<u64>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long, required_unless_present = "entries", requires = "trace")]
    pub graph: Option<PathBuf>,
    #[arg(long, requires = "graph")]
    pub trace: Option<PathBuf>,
    #[arg(long, requires = "trace")]
    pub partition_a: Option<PathBuf>,
    #[arg(long, requires = "trace")]
    pub partition_b: Option<PathBuf>,
    /// Analyze this Solution A entry count instead of a trace.
    #[arg(long, conflicts_with_all = ["graph", "trace"], requires = "nodes")]
    pub entries: Option<u64>,
    /// Topology size the override counts were measured on.
    #[arg(long, requires = "entries")]
    pub nodes: Option<u64>,
    #[arg(long, requires = "entries")]
    pub total_entries: Option<u64>,
    #[arg(long, requires = "entries")]
    pub internal_b: Option<u64>,
    #[arg(long, requires = "entries", default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub scenario: u8,
    #[command(flatten)]
    pub analysis: AnalysisFlags,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Overhead documents written by `analyze`.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[command(flatten)]
    pub analysis: AnalysisFlags,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub topology: TopologyFlags,
    /// Scenarios to run, e.g. `1,2,3`.
    #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u8).range(1..=3))]
    pub scenarios: Vec<u8>,
    #[command(flatten)]
    pub simulation: SimulationFlags,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub objectives: Vec<ObjectiveFlag>,
    #[command(flatten)]
    pub partition: PartitionFlags,
    #[command(flatten)]
    pub analysis: AnalysisFlags,
    /// Run directory; defaults to `output_dir` from the config.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

fn scenario(n: u8) -> Scenario {
    Scenario::try_from(n).expect("range checked by clap")
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl TopologyFlags {
    fn apply(self, cfg: &mut RunConfig) {
        let t = &mut cfg.topology;
        set(&mut t.n, self.n);
        set(&mut t.p, self.p);
        set(&mut t.beta, self.beta);
        set(&mut t.m_mean, self.m_mean);
        set(&mut t.seed, self.topology_seed);
        if self.edgelist.is_some() {
            t.edgelist = self.edgelist;
        }
    }
}

impl SimulationFlags {
    fn apply(self, cfg: &mut RunConfig) {
        let s = &mut cfg.simulation;
        set(&mut s.mrai, self.mrai);
        set(&mut s.seed, self.sim_seed);
        set(&mut s.event_cap, self.event_cap);
        set(
            &mut s.session_order,
            self.session_order.map(|o| match o {
                OrderFlag::Canonical => SessionOrder::Canonical,
                OrderFlag::Shuffled => SessionOrder::Shuffled,
            }),
        );
    }
}

impl PartitionFlags {
    fn apply(self, cfg: &mut RunConfig) {
        let p = &mut cfg.partition;
        set(&mut p.mode, self.mode);
        set(&mut p.epsilon, self.epsilon);
        set(&mut p.restarts, self.restarts);
        set(&mut p.max_passes, self.max_passes);
        set(&mut p.exact_limit, self.exact_limit);
        set(&mut p.seed, self.partition_seed);
        set(&mut p.weights, self.weights);
    }
}

impl AnalysisFlags {
    fn apply(self, cfg: &mut RunConfig) {
        let a = &mut cfg.analysis;
        set(&mut a.per_packet_latency, self.latency);
        set(&mut a.id_bytes, self.id_bytes);
        set(&mut a.entry_size, self.entry_size);
        if !self.targets.is_empty() {
            a.targets = self.targets;
        }
    }
}

/// Runs one parsed invocation, returning the lines to print.
pub fn execute(cli: Cli) -> Result<Vec<String>, CliError> {
    let mut cfg = RunConfig::load_or_default(cli.config.as_deref())?;
    let wrote = |p: &std::path::Path| format!("wrote {}", p.display());
    match cli.command {
        Command::Gen(a) => {
            a.topology.apply(&mut cfg);
            set(&mut cfg.topology.seed, a.seed);
            let g = cmd_gen(&cfg, &a.out)?;
            Ok(vec![format!(
                "{} ({} nodes, {} edges, digest {})",
                wrote(&a.out),
                g.graph.node_count(),
                g.graph.edge_count(),
                g.digest
            )])
        }
        Command::Sim(a) => {
            a.simulation.apply(&mut cfg);
            set(&mut cfg.simulation.seed, a.seed);
            let doc = cmd_sim(&cfg, &a.graph, scenario(a.scenario), &a.out)?;
            Ok(vec![format!(
                "{} ({} updates, {} entries)",
                wrote(&a.out),
                doc.trace.total_updates,
                doc.trace.total_entries
            )])
        }
        Command::Partition(a) => {
            a.partition.apply(&mut cfg);
            set(&mut cfg.partition.seed, a.seed);
            let doc = cmd_partition(&cfg, &a.graph, a.trace.as_deref(), a.objective.into(), &a.out)?;
            Ok(vec![format!(
                "{} ({} solver, objective {}, sizes {:?})",
                wrote(&a.out),
                doc.solver,
                doc.cost,
                doc.sizes
            )])
        }
        Command::Analyze(a) => {
            a.analysis.apply(&mut cfg);
            let (graph, trace) = (a.graph, a.trace);
            let input = match (a.entries, &graph, &trace) {
                (Some(entries), _, _) => AnalyzeInput::Counts(CountsOverride {
                    n: a.nodes.expect("required by clap"),
                    scenario: scenario(a.scenario),
                    entries,
                    total_entries: a.total_entries,
                    internal_updates_b: a.internal_b,
                }),
                (None, Some(graph), Some(trace)) => AnalyzeInput::Files {
                    graph,
                    trace,
                    partition_a: a.partition_a.as_deref(),
                    partition_b: a.partition_b.as_deref(),
                },
                _ => return Err(CliError::Usage("analyze needs --graph and --trace, or --entries".into())),
            };
            let doc = cmd_analyze(&cfg, input, &a.out)?;
            let mut lines = vec![wrote(&a.out)];
            if let Some(t) = doc.overhead.time_overhead {
                lines.push(format!("time overhead {t:.1} s ({:.1} min)", t / 60.0));
            }
            for e in &doc.overhead.extrapolations {
                lines.push(format!(
                    "  n = {}: {:.0} entries, {:.1} min ({})",
                    e.target_n,
                    e.entries,
                    e.seconds / 60.0,
                    e.model.label()
                ));
            }
            Ok(lines)
        }
        Command::Report(a) => {
            a.analysis.apply(&mut cfg);
            let doc = cmd_report(&cfg, &a.inputs, &a.out)?;
            Ok(vec![format!("{} ({} rows)", wrote(&a.out), doc.report.rows.len())])
        }
        Command::Pipeline(a) => {
            a.topology.apply(&mut cfg);
            if !a.scenarios.is_empty() {
                cfg.simulation.scenarios = a.scenarios.into_iter().map(scenario).collect();
            }
            a.simulation.apply(&mut cfg);
            if !a.objectives.is_empty() {
                cfg.partition.objectives = a.objectives.into_iter().map(Objective::from).collect();
            }
            a.partition.apply(&mut cfg);
            a.analysis.apply(&mut cfg);
            set(&mut cfg.output_dir, a.out_dir.map(Some));
            let dir = cfg
                .output_dir
                .clone()
                .ok_or_else(|| CliError::Usage("pipeline needs --out-dir or output_dir in the config".into()))?;
            let (_, log) = cmd_pipeline(&cfg, &dir)?;
            let mut lines: Vec<String> = log.reused.iter().map(|p| format!("reused {}", p.display())).collect();
            lines.extend(log.written.iter().map(|p| wrote(p)));
            Ok(lines)
        }
    }
}

/// Parses `args` and runs the command, printing to stdout and stderr.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            0
        }
        Err(e) => {
            eprintln!("bgpdist: {e}");
            e.exit_code()
        }
    }
}
