//! Crate-wide error type.
//!
//! One enum covers every failure mode so errors compose across the pipeline
//! (parse → fit → predict → inference). Variants carry the data callers need
//! to react: the smallest observed distance for an empty kernel window, the
//! offending index for a singular point, line/column for parse errors.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes of the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Incompatible dimensions (grid length, response dimension, score count…).
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Malformed input value (non-finite weight, non-increasing grid…).
    #[error("invalid input: {0}")]
    Invalid(String),

    /// No observation receives positive kernel weight at the requested point.
    /// `smallest_distance` is the nearest observed distance, so callers can
    /// tell how far the bandwidth would have to stretch.
    #[error("empty kernel window: smallest distance {smallest_distance:.6e} is out of bandwidth reach")]
    EmptyWindow { smallest_distance: f64 },

    /// An evaluation point sits within the singularity tolerance of data
    /// point `index`, where the requested quantity is undefined.
    #[error("evaluation point coincides with data point {index} (within singularity tolerance)")]
    SingularPoint { index: usize },

    /// The plug-in covariance is numerically singular even after ridging.
    #[error("singular plug-in covariance (condition number {condition:.3e})")]
    SingularCovariance { condition: f64 },

    /// Every cross-validation candidate was disqualified.
    #[error("bandwidth selection failed: all {candidates} candidates disqualified")]
    BandwidthSelection { candidates: usize },

    /// Malformed CSV input; positions are 1-based.
    #[error("parse error at line {line}, column {column}: {reason}")]
    Parse {
        line: usize,
        column: usize,
        reason: String,
    },

    /// Structurally inconsistent data (row counts, header mismatches…).
    #[error("shape error: {0}")]
    Shape(String),

    /// A kernel was used in a context it does not support (e.g. the
    /// untruncated Gaussian inside inference).
    #[error("kernel not supported here: {0}")]
    Kernel(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code class for the command-line tool: `3` for data
    /// problems (parsing, shapes, dimensions), `4` for numeric failures
    /// (empty windows, singularities, failed selection).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Dimension(_)
            | Error::Invalid(_)
            | Error::Parse { .. }
            | Error::Shape(_)
            | Error::Kernel(_)
            | Error::Io(_) => 3,
            Error::EmptyWindow { .. }
            | Error::SingularPoint { .. }
            | Error::SingularCovariance { .. }
            | Error::BandwidthSelection { .. } => 4,
        }
    }

    /// Short machine-readable kind tag used in CLI diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::Invalid(_) => "invalid",
            Error::EmptyWindow { .. } => "empty-window",
            Error::SingularPoint { .. } => "singular-point",
            Error::SingularCovariance { .. } => "singular-covariance",
            Error::BandwidthSelection { .. } => "bandwidth-selection",
            Error::Parse { .. } => "parse",
            Error::Shape(_) => "shape",
            Error::Kernel(_) => "kernel",
            Error::Io(_) => "io",
        }
    }
}
