use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("quadrature did not converge: partial value {partial}, error estimate {error:e}")]
    Quadrature { partial: Complex64, error: f64 },
    #[error("non-finite value at node {node:?}")]
    NonFinite { node: Vec<f64> },
    #[error("point {0:?} lies on the singular set")]
    Singular(Vec<f64>),
    #[error("degree {requested} exceeds the resolved degree {available} of the quadrature")]
    Resolution { requested: usize, available: usize },
    #[error("sequence did not converge: {reason}")]
    Divergent { reason: String, table: Vec<(f64, f64)> },
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
