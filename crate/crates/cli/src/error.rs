use std::io;
use std::path::{Path, PathBuf};

use bgpdist_core::analysis::AnalysisError;
use bgpdist_core::bgp::BgpError;
use bgpdist_core::partition::PartitionError;
use bgpdist_core::topology::TopologyError;
use thiserror::Error;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARAMETER: i32 = 3;
pub const EXIT_CONSISTENCY: i32 = 4;
pub const EXIT_IO: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("consistency error: {0}")]
    Consistency(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: malformed input: {msg}")]
    Malformed { path: PathBuf, msg: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Parameter(_) => EXIT_PARAMETER,
            CliError::Consistency(_) => EXIT_CONSISTENCY,
            CliError::Io { .. } | CliError::Malformed { .. } => EXIT_IO,
        }
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn malformed(path: &Path, msg: impl ToString) -> Self {
        CliError::Malformed { path: path.to_path_buf(), msg: msg.to_string() }
    }
}

impl From<TopologyError> for CliError {
    fn from(e: TopologyError) -> Self {
        CliError::Parameter(e.to_string())
    }
}

impl From<BgpError> for CliError {
    fn from(e: BgpError) -> Self {
        match e {
            BgpError::InvalidScenario(_) => CliError::Usage(e.to_string()),
            _ => CliError::Parameter(e.to_string()),
        }
    }
}

impl From<PartitionError> for CliError {
    fn from(e: PartitionError) -> Self {
        match e {
            PartitionError::Consistency(_) | PartitionError::Invalid(_) => CliError::Consistency(e.to_string()),
            _ => CliError::Parameter(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Parameter(_) => CliError::Parameter(e.to_string()),
            AnalysisError::Consistency(_) => CliError::Consistency(e.to_string()),
        }
    }
}
