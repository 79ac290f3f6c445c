use thiserror::Error;

/// Every failure mode of the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("divergent integral: {0}")]
    Divergence(String),

    #[error("unsupported piece shape: {0}")]
    UnsupportedShape(String),

    #[error("integrand returned {value} at abscissa {abscissa}")]
    Evaluation { abscissa: f64, value: f64 },

    #[error("weak norm is unbounded: {0}")]
    UnboundedNorm(String),

    #[error("kernel constant is infinite: {0}")]
    InfiniteKernelConstant(String),

    #[error("singular denominator: {0}")]
    SingularDenominator(String),

    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
