//! Numerics for the bulk eigenvalue-gap law of GUE and moment-matched Wigner
//! matrices.
//!
//! * [`kernels`]: semicircle law, Hermite kernels, the sine kernel.
//! * [`operators`]: Nyström discretization, Fredholm determinants, Schatten
//!   norms, finite-rank projections and their conditioning.
//! * [`counting`]: exact laws of the number of points in a set.
//! * [`gaudin`]: the gap probability `E(s)`, its density and CDF, by two routes.
//! * [`ensembles`]: spectrum sampling and gap statistics.
//! * [`stats`]: goodness-of-fit distances.

pub mod basis;
pub mod counting;
pub mod ensembles;
pub mod error;
pub mod gaudin;
pub mod hermite;
pub mod interval;
pub mod kernels;
pub mod linalg;
pub mod operators;
pub mod quadrature;
pub mod stats;

pub use error::{Error, Result};
pub use interval::Interval;
pub use kernels::KernelFunction;
