use thiserror::Error;

/// Failures of the numeric kernels (quadrature, bracketing).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericError {
    #[error("quadrature did not converge: value {value}, error estimate {error:e}")]
    QuadratureNotConverged { value: f64, error: f64 },
    #[error("no sign change found while expanding from {from} to {to}")]
    NoBracket { from: f64, to: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("root residual {value:e} above tolerance")]
    Residual { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("{what} out of domain: {value}")]
    OutOfDomain { what: &'static str, value: f64 },
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error("malformed episode trace: {0}")]
    Trace(String),
    #[error("wrong update rule for this trace: {0}")]
    WrongRule(&'static str),
    #[error("boundary iteration ({case}) found no root: {source}")]
    BoundaryRoot {
        case: &'static str,
        source: NumericError,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("episode {episode}: {source}")]
    Episode {
        episode: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
