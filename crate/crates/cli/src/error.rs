//! Error type with the process exit-code mapping: 0 success, 2 config
//! error, 3 not converged, 4 model/runtime error.

use drypath_core::anneal::SolveError;
use drypath_core::kinetics::KineticsError;
use drypath_core::oracle::OracleError;
use drypath_core::path::PathSpaceError;
use drypath_core::process::{ConfigError, ModelError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver did not converge: {0}")]
    NotConverged(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 2,
            AppError::NotConverged(_) => 3,
            AppError::Model(_) | AppError::Io(_) => 4,
        }
    }
}

impl From<ConfigError> for AppError {
    fn from(e: ConfigError) -> Self {
        AppError::Config(e.to_string())
    }
}

impl From<KineticsError> for AppError {
    fn from(e: KineticsError) -> Self {
        AppError::Model(e.to_string())
    }
}

impl From<ModelError> for AppError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Config(c) => AppError::Config(c.to_string()),
            other => AppError::Model(other.to_string()),
        }
    }
}

impl From<PathSpaceError> for AppError {
    fn from(e: PathSpaceError) -> Self {
        AppError::Config(e.to_string())
    }
}

impl From<OracleError> for AppError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::GridTooCoarse { .. } => AppError::Config(e.to_string()),
            OracleError::PathSpace(p) => p.into(),
            other => AppError::Model(other.to_string()),
        }
    }
}

impl From<SolveError> for AppError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::NotConverged(_) => AppError::NotConverged(e.to_string()),
            SolveError::Schedule(s) => AppError::Config(s),
            SolveError::PathSpace(p) => p.into(),
            SolveError::Model(m) => m.into(),
            other => AppError::Model(other.to_string()),
        }
    }
}

impl From<csv::Error> for AppError {
    fn from(e: csv::Error) -> Self {
        AppError::Io(std::io::Error::other(e))
    }
}
