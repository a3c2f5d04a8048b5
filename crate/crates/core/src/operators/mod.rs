//! Integral operators on `L^2(R)` through Nyström discretization: Fredholm
//! determinants, spectra and Schatten norms; finite-rank projections and their
//! conditioning on an empty interval; the resolvent `K_0` and the perturbation
//! bound comparing a finite-rank projection with a limiting one.

mod discretized;
mod perturbation;
mod projection;

pub use discretized::{
    discretize, discretize_between, discretize_on, fredholm_det, fredholm_det_adaptive, norms,
    operator_spectrum, schatten_norms, DiscretizedOperator, NormReport, EIGEN_DROP_TOL,
    EIGEN_FAIL_TOL,
};
pub use perturbation::{
    conditioned_deviation_s1, fredholm_resolvent_k0, perturbation_bound_m, perturbation_bound_unchecked, restricted_hs_norm_sq,
    PerturbationBound, ResolventK0,
};
pub use projection::FiniteRankProjection;
