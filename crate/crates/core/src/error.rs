//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A distribution or model parameter is outside its domain.
    #[error("parameter out of domain: {0}")]
    Domain(String),

    /// Invalid configuration (dimensions, ranges, unknown variants).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A quantity that must stay finite did not.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// A sampler update failed; carries the gene and iteration for context.
    #[error("sampler failure at gene {gene}, iteration {iteration}: {message}")]
    Sampler {
        gene: usize,
        iteration: usize,
        message: String,
    },

    /// Too many per-gene failures for the scan to be trustworthy.
    #[error("scan failed for {failed} of {total} genes (first: {first})")]
    ScanFailures {
        failed: usize,
        total: usize,
        first: String,
    },

    /// A normal-equation block could not be factorized.
    #[error("singular system in {0}")]
    Singular(String),

    /// Within-chain variance is zero; PSRF is undefined.
    #[error("degenerate chains: zero within-chain variance")]
    DegenerateChains,

    /// AUC is undefined when truth labels are all-positive or all-negative.
    #[error("undefined AUC: {0}")]
    UndefinedAuc(String),

    /// An operation that needs draws received none.
    #[error("empty draw sequence for {0}")]
    EmptyDraws(String),

    /// File parsing failed; 1-based row/column of the offending cell.
    #[error("parse error in {path} at row {row}, column {col}: {message}")]
    Parse {
        path: String,
        row: usize,
        col: usize,
        message: String,
    },

    /// Underlying I/O failure.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by bad inputs rather than runtime failures.
    /// The CLI maps these to exit code 2, everything else to 3.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::Config(_) | Error::Parse { .. }
        )
    }
}
