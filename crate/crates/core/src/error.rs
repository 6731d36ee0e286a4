use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite entry in input")]
    NonFinite,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("no solution: least-squares residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    NoSolution { residual: f64, tol: f64 },

    #[error("spectrum is not closed under the pairing required by the relation")]
    SpectrumNotSymmetric,

    #[error("missing Jordan chain for exceptional eigenvalue {0}")]
    MissingChain(String),

    #[error("seed violates the relation (residual {0:.3e})")]
    SeedViolatesRelation(f64),

    #[error("no seed operator could be found")]
    NoSeed,
}

pub type Result<T> = std::result::Result<T, Error>;
