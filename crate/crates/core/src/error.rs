//! Error type shared by every stage of the pipeline.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters, patterns or configuration.
    #[error("validation error: {0}")]
    Validation(String),

    /// A basis or dense matrix would exceed the configured size limit.
    #[error("capacity exceeded: {what} needs {requested} but the limit is {limit}")]
    Capacity {
        what: &'static str,
        requested: usize,
        limit: usize,
    },

    /// A perturbative energy denominator vanishes (or nearly so).
    #[error("resonance: denominator {denominator} = {value:e} is below the floor {floor:e}")]
    Resonance {
        denominator: String,
        value: f64,
        floor: f64,
    },

    /// The line-band formula of the {2,2} band divides by the impurity strength.
    #[error("impurity strength Gamma vanishes; the bound-state branch is undefined")]
    SingularImpurity,

    #[error("matrix is not Hermitian: max |H - H^dagger| = {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("eigensolver failed: {0}")]
    Numerical(String),

    /// Fewer pattern states were found than the band must hold.
    #[error("band overlap at l = {l}: found {found} states of pattern {pattern}, expected {expected}")]
    BandOverlap {
        pattern: String,
        l: i64,
        found: usize,
        expected: usize,
    },

    #[error("state {0} does not belong to the active sector")]
    NotInSector(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::NotInSector(_) | Error::Json(_) => 2,
            Error::Capacity { .. } => 3,
            Error::Resonance { .. } | Error::SingularImpurity => 4,
            Error::NotHermitian { .. } | Error::Numerical(_) | Error::BandOverlap { .. } => 5,
            Error::Io(_) | Error::Csv(_) => 1,
        }
    }
}
