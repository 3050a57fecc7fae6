//! Run configuration: one TOML document, every field defaulted, with
//! command-line flags applied on top.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use bgpdist_core::analysis::{AnalysisOptions, DEFAULT_ID_BYTES, DEFAULT_PACKET_LATENCY, DEFAULT_TARGETS};
use bgpdist_core::bgp::{Scenario, SessionOrder};
use bgpdist_core::partition::{Objective, DEFAULT_EPSILON, DEFAULT_EXACT_LIMIT};
use bgpdist_core::sim::DEFAULT_EVENT_CAP;
use bgpdist_core::topology::GlpParams;
use serde::{Deserialize, Serialize};

use crate::digest::sha256_hex;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyConfig {
    /// Read this edge list instead of generating.
    pub edgelist: Option<PathBuf>,
    pub n: usize,
    pub p: f64,
    pub beta: f64,
    pub m_mean: f64,
    pub seed: u64,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        let d = GlpParams::with_defaults(200);
        Self { edgelist: None, n: d.n, p: d.p, beta: d.beta, m_mean: d.m_mean, seed: 1 }
    }
}

impl TopologyConfig {
    pub fn glp(&self) -> GlpParams {
        GlpParams { n: self.n, p: self.p, beta: self.beta, m_mean: self.m_mean }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub scenarios: Vec<Scenario>,
    pub mrai: u64,
    pub seed: u64,
    pub session_order: SessionOrder,
    pub event_cap: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            scenarios: Scenario::ALL.to_vec(),
            mrai: 0,
            seed: 1,
            session_order: SessionOrder::Canonical,
            event_cap: DEFAULT_EVENT_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    /// Exact below the size limit, heuristic above it.
    Auto,
    Exact,
    Heuristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum WeightSource {
    /// Edge weights are transmitted entries, vertex weights are |ME|.
    Trace,
    /// Every edge and vertex weighs 1.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionConfig {
    pub objectives: Vec<Objective>,
    pub epsilon: f64,
    pub mode: SolverMode,
    pub exact_limit: usize,
    pub restarts: usize,
    pub max_passes: usize,
    pub seed: u64,
    pub weights: WeightSource,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self {
            objectives: vec![Objective::EdgeCut, Objective::VertexBoundary],
            epsilon: DEFAULT_EPSILON,
            mode: SolverMode::Auto,
            exact_limit: DEFAULT_EXACT_LIMIT,
            restarts: 16,
            max_passes: 20,
            seed: 1,
            weights: WeightSource::Trace,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Seconds per transmitted entry.
    pub per_packet_latency: f64,
    pub id_bytes: u64,
    pub entry_size: u64,
    pub targets: Vec<u64>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            per_packet_latency: DEFAULT_PACKET_LATENCY,
            id_bytes: DEFAULT_ID_BYTES,
            entry_size: 1,
            targets: DEFAULT_TARGETS.to_vec(),
        }
    }
}

impl AnalysisConfig {
    pub fn options(&self) -> AnalysisOptions {
        AnalysisOptions {
            per_packet_latency: self.per_packet_latency,
            id_bytes: self.id_bytes,
            entry_size: self.entry_size,
            targets: self.targets.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: Option<PathBuf>,
    pub topology: TopologyConfig,
    pub simulation: SimulationConfig,
    pub partition: PartitionConfig,
    pub analysis: AnalysisConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| CliError::malformed(path, e))
    }

    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self, CliError> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Parameter(m.into()));
        if self.topology.edgelist.is_none() {
            self.topology.glp().validate()?;
        }
        if self.simulation.scenarios.is_empty() {
            return bad("at least one scenario is required");
        }
        if !(0.0..=1.0).contains(&self.partition.epsilon) {
            return bad("epsilon must lie in [0, 1]");
        }
        if self.partition.restarts == 0 {
            return bad("restarts must be positive");
        }
        if !(self.analysis.per_packet_latency >= 0.0 && self.analysis.per_packet_latency.is_finite()) {
            return bad("per_packet_latency must be a non-negative number");
        }
        if self.analysis.targets.contains(&0) {
            return bad("extrapolation targets must be positive");
        }
        if self.analysis.entry_size == 0 {
            return bad("entry_size must be positive");
        }
        Ok(())
    }

    /// Every seed that can influence a run, by name.
    pub fn seeds(&self) -> BTreeMap<String, u64> {
        BTreeMap::from([
            ("topology".to_string(), self.topology.seed),
            ("simulation".to_string(), self.simulation.seed),
            ("partition".to_string(), self.partition.seed),
        ])
    }

    /// SHA-256 of the canonical JSON form. The output directory is left out
    /// so that moving a run does not change its identity.
    pub fn digest(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = None;
        sha256_hex(serde_json::to_string(&canonical).expect("config serializes").as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_default() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn partial_sections_keep_defaults() {
        let c = RunConfig::parse(
            "[simulation]\nscenarios = [2]\nseed = 9\n[partition]\nobjectives = [\"B\"]\nmode = \"heuristic\"\n",
        )
        .unwrap();
        assert_eq!(c.simulation.scenarios, vec![Scenario::RandomDelivery]);
        assert_eq!(c.simulation.seed, 9);
        assert_eq!(c.simulation.mrai, 0);
        assert_eq!(c.partition.objectives, vec![Objective::VertexBoundary]);
        assert_eq!(c.partition.mode, SolverMode::Heuristic);
        assert_eq!(c.partition.epsilon, DEFAULT_EPSILON);
    }

    #[test]
    fn rejects_unknown_keys_and_scenarios() {
        assert!(RunConfig::parse("[topology]\nnodes = 5\n").is_err());
        assert!(RunConfig::parse("[simulation]\nscenarios = [4]\n").is_err());
    }

    #[test]
    fn digest_ignores_output_dir_only() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.output_dir = Some("elsewhere".into());
        assert_eq!(a.digest(), b.digest());
        b.simulation.seed += 1;
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn validation_catches_bad_parameters() {
        let mut c = RunConfig::default();
        c.topology.p = 1.5;
        assert!(matches!(c.validate(), Err(CliError::Parameter(_))));
        let mut c = RunConfig::default();
        c.partition.epsilon = -0.1;
        assert!(c.validate().is_err());
        RunConfig::default().validate().unwrap();
    }
}
