use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} outside the valid range {lo}..={hi}")]
    IndexOutOfRange { index: usize, lo: usize, hi: usize },

    /// An eigenvalue of a discretized projection restriction left `[-tol, 1 + tol]`.
    #[error("discretization failure: eigenvalue {value:e} outside [-{tol:e}, 1 + {tol:e}]")]
    Discretization { value: f64, tol: f64 },

    /// Some element of the subspace is numerically supported inside the excluded interval.
    #[error("degenerate conditioning: smallest Gram eigenvalue {0:e}")]
    DegenerateConditioning(f64),

    #[error("1 - P0 1_J P0 is not invertible at this truncation: smallest eigenvalue {0:e}")]
    NotInvertible(f64),

    #[error("perturbation hypothesis violated: ||(P0 - P) 1_J||_op = {lhs:e} > {rhs:e}")]
    HypothesisViolated { lhs: f64, rhs: f64 },

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("ODE integration failure at x = {x}: {reason}")]
    Ode { x: f64, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
