use thiserror::Error;

/// Errors raised while validating inputs or pricing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("correlation matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("degenerate positive leg: no asset with a positive effective weight")]
    DegeneratePositiveLeg,

    #[error("levy moment matching infeasible on the {leg} leg")]
    LevyInfeasible { leg: &'static str },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("fixing error: {0}")]
    Fixing(String),

    #[error("covariance factorization failed: pivot {pivot:.3e} below tolerance")]
    Factorization { pivot: f64 },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("unknown table case `{0}`")]
    UnknownCase(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Schema(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
