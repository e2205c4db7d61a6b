use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeamformError {
    #[error("estimated channel of user {0} is identically zero")]
    ZeroChannel(usize),
    #[error("estimated channel matrix is rank deficient (σ_min/σ_max = {0:e})")]
    RankDeficient(f64),
    #[error("bisection found no feasible SINR level (upper bound {0:e})")]
    NoFeasiblePoint(f64),
    #[error("invalid input: {0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{failed} of {total} realizations failed, above the 1% limit")]
    TooManyFailures { failed: usize, total: usize },
    #[error("realization {realization}: could not obtain a full-rank channel after {attempts} draws")]
    RankResampleExhausted { realization: usize, attempts: usize },
    #[error("empty sample set")]
    EmptySamples,
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
