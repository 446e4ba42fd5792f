use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "standing assumption 2*H2 + (H1 - 1)*alpha > 0 violated: \
         alpha={alpha}, H1={h1}, H2={h2} gives {value}"
    )]
    StandingAssumption { alpha: f64, h1: f64, h2: f64, value: f64 },

    #[error("matrix is not positive semi-definite: pivot {pivot} is {value:e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("tridiagonal system is singular at row {row}")]
    Singular { row: usize },

    #[error("{dimension} dimension {size} is not divisible by factor {factor}")]
    NotDivisible { dimension: &'static str, size: usize, factor: usize },

    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },

    #[error("{what} did not converge (partial estimate {estimate:e})")]
    NoConvergence { what: &'static str, estimate: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
