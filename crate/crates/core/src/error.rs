use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("denominator 1 - rho*S*u_SS = {denom:e} at S = {s} is below the singularity floor")]
    SingularDenominator { s: f64, denom: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("m = 0 reduces the family to the trivial solutions; use trivial_u")]
    DegenerateFamily,

    #[error("division by zero in {0}")]
    DivisionByZero(&'static str),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("no convergence after {iterations} iterations (residual {residual:e}){}", fmt_layer(*.layer))]
    NoConvergence {
        iterations: usize,
        residual: f64,
        layer: Option<usize>,
    },

    #[error("singular Jacobian (pivot {pivot} in row {row})")]
    SingularJacobian { row: usize, pivot: f64 },

    #[error("unknown check `{0}`")]
    UnknownCheck(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn fmt_layer(layer: Option<usize>) -> String {
    layer.map(|j| format!(" at layer {j}")).unwrap_or_default()
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Attach a time-layer index to a convergence failure.
    pub fn at_layer(self, j: usize) -> Self {
        match self {
            Error::NoConvergence {
                iterations, residual, ..
            } => Error::NoConvergence {
                iterations,
                residual,
                layer: Some(j),
            },
            other => other,
        }
    }
}
