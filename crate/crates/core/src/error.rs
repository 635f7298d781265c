use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{what} is ill-conditioned (cond = {cond:.3e}, limit {limit:.1e})")]
    IllConditioned { what: String, cond: f64, limit: f64 },

    #[error("{0} is singular")]
    Singular(String),

    #[error("quadrature did not converge: doubling the grid changed a coefficient by {change:.3e} (relative, tolerance {tolerance:.1e})")]
    NonConvergence { change: f64, tolerance: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by the numbers rather than by the inputs'
    /// shape or the files on disk.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::IllConditioned { .. } | Error::Singular(_) | Error::NonConvergence { .. }
        )
    }
}
