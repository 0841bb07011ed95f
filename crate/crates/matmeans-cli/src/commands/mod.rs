pub mod check;
pub mod probe;
pub mod risk;
pub mod sample;
pub mod table1;

use std::fmt;

use crate::config::ConfigError;
use crate::data::IngestError;

/// Exit codes: 0 success, 2 validation failure, 3 propriety failure,
/// 4 sampler/numeric failure, 5 probe contradiction.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Propriety(String),
    Sampler(String),
    ProbeContradiction(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 2,
            CliError::Propriety(_) => 3,
            CliError::Sampler(_) => 4,
            CliError::ProbeContradiction(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Propriety(m) => write!(f, "propriety failure: {m}"),
            CliError::Sampler(m) => write!(f, "sampler failure: {m}"),
            CliError::ProbeContradiction(m) => write!(f, "probe contradiction: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<matmeans::Error> for CliError {
    fn from(e: matmeans::Error) -> Self {
        use matmeans::Error as E;
        match e {
            E::InvalidInput(_) | E::PlanIncompatible(_) => CliError::Validation(e.to_string()),
            E::ImproperPosterior { .. } => CliError::Propriety(e.to_string()),
            _ => CliError::Sampler(e.to_string()),
        }
    }
}

/// (m, k) for the run: from the data file when given, else from model.m/.k.
pub fn model_shape(cfg: &crate::config::RunConfig) -> Result<(usize, usize), CliError> {
    if let Some(path) = &cfg.data_path {
        let data = crate::data::ingest_csv(path)?;
        return Ok((data.m(), data.k()));
    }
    match (cfg.model_m, cfg.model_k) {
        (Some(m), Some(k)) => Ok((m, k)),
        _ => Err(CliError::Validation(
            "need either `data` or both `model.m` and `model.k`".into(),
        )),
    }
}
