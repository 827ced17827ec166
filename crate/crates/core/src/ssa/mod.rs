//! Subspace model of the byte series: learning phase (lagged embedding,
//! eigendecomposition of the lag-covariance matrix, centroid) and detection
//! phase (eigenvalue-weighted departure scores, batch and streaming).

mod detector;
mod eigen;
mod embed;
mod model;
mod persist;
mod scores;

use thiserror::Error;

pub use detector::StreamDetector;
pub use eigen::{eigendecompose_covariance, select_dimension, symmetric_spectrum, DimensionRule, Spectrum};
pub use embed::{build_trajectory_matrix, lagged_gram, lagged_mean};
pub use model::{train, LagConfig, SsaModel};
pub use persist::{decode_model, encode_model, load_model, save_model, MODEL_MAGIC};
pub use scores::{read_scores_csv, score_from, score_series, write_scores_csv, DepartureSeries};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SsaError {
    #[error("series too short: need {needed} bytes, have {available}")]
    SeriesTooShort { needed: usize, available: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("value {0} is not a byte")]
    ByteOutOfRange(i64),
    #[error("format error: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(String),
}
