use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {residual:.3e})")]
    Convergence { sweeps: usize, residual: f64 },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("under-resolved mode family {family}: {detail}")]
    UnderResolved { family: String, detail: String },

    #[error("quadrature grid does not resolve the integrand: {0}")]
    Resolution(String),

    #[error("basis file format version {found} is not supported (expected {expected}); migration required")]
    Version { found: u16, expected: u16 },

    #[error("corrupt basis file: {0}")]
    Corruption(String),

    #[error("degenerate product: {0}")]
    DegenerateProduct(String),

    #[error("numerical breakdown: {0}")]
    Breakdown(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("basis too small: {0}")]
    BasisTooSmall(String),

    #[error("threshold grid exhausted: {0}")]
    GridExhausted(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// True for failures caused by the numerics rather than by the caller's input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Factorization(_)
                | Error::Convergence { .. }
                | Error::DegenerateProduct(_)
                | Error::Breakdown(_)
                | Error::UnderResolved { .. }
                | Error::GridExhausted(_)
        )
    }
}

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
