use super::discretized::{discretize_on, norms, DiscretizedOperator};
use super::projection::FiniteRankProjection;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::kernels::KernelFunction;
use crate::linalg::{sym_eigenvalues, symmetrize};
use crate::quadrature::QuadratureGrid;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

const PANEL_NODES: usize = 16;
const J_ORDER: usize = 32;

/// Discretized `K_0` with `(1 + K_0)(1 - P_0 1_J P_0) = 1` on the truncation window.
#[derive(Debug, Clone)]
pub struct ResolventK0 {
    pub operator: DiscretizedOperator,
    /// `||(1 + K_0)(1 - P_0 1_J P_0) - 1||_op` at the working discretization.
    pub residual: f64,
    /// `||K_0 - (1 + K_0) P_0 1_J P_0||_op`.
    pub consistency_residual: f64,
    /// Smallest eigenvalue of `1 - P_0 1_J P_0` on the window.
    pub min_eigenvalue: f64,
}

impl ResolventK0 {
    pub fn op_norm(&self) -> f64 {
        norms(&self.operator).op_norm
    }
}

/// Builds `K_0 = (1 - P_0 1_J P_0)^{-1} - 1` on `[-L, L]` with about `order` nodes
/// in 16-point panels whose edges include the endpoints of `J`.
pub fn fredholm_resolvent_k0(
    p0: &KernelFunction,
    j: Interval,
    truncation: f64,
    order: usize,
) -> Result<ResolventK0> {
    if !(truncation > 0.0) || order < PANEL_NODES {
        return Err(Error::InvalidArgument("need L > 0 and order >= 16".into()));
    }
    let window = Interval::new(-truncation, truncation);
    if j.is_compact() && (j.lo < -truncation || j.hi > truncation) {
        return Err(Error::InvalidArgument("J must lie inside the truncation window".into()));
    }
    let panels = order.div_ceil(PANEL_NODES);
    let width = 2.0 * truncation / panels as f64;
    let grid = QuadratureGrid::composite(-truncation, truncation, width, PANEL_NODES, &[j.lo, j.hi])?;
    let m = grid.len();
    if j.is_empty() {
        return Ok(ResolventK0 {
            operator: DiscretizedOperator::zero(window, grid),
            residual: 0.0,
            consistency_residual: 0.0,
            min_eigenvalue: 1.0,
        });
    }
    let a = discretize_on(p0, window, grid.clone())?;
    let a = a.matrix();
    let mask: Vec<f64> = grid.nodes.iter().map(|&x| if j.contains(x) { 1.0 } else { 0.0 }).collect();
    let mut ada = a * DMatrix::from_fn(m, m, |i, k| if i == k { mask[i] } else { 0.0 }) * a;
    symmetrize(&mut ada);
    let eye = DMatrix::<f64>::identity(m, m);
    let t = &eye - &ada;
    let min_eigenvalue = sym_eigenvalues(&t)[0];
    if !(min_eigenvalue > 1e-10) {
        return Err(Error::NotInvertible(min_eigenvalue));
    }
    let chol = t.clone().cholesky().ok_or(Error::NotInvertible(min_eigenvalue))?;
    let mut k0 = chol.solve(&ada);
    symmetrize(&mut k0);
    let residual = crate::operators::schatten_norms(&(( &eye + &k0) * &t - &eye)).op_norm;
    let consistency_residual = crate::operators::schatten_norms(&(&k0 - (&eye + &k0) * &ada)).op_norm;
    Ok(ResolventK0 {
        operator: DiscretizedOperator::from_matrix(window, grid, k0),
        residual,
        consistency_residual,
        min_eigenvalue,
    })
}

/// `||1_J P_0||_HS^2 = int_J int_R K(x, y)^2 dy dx`, approximated with the inner
/// integral truncated to `window`.
pub fn restricted_hs_norm_sq(kernel: &KernelFunction, j: Interval, window: Interval, panel: f64) -> Result<f64> {
    if j.is_empty() {
        return Ok(0.0);
    }
    let rows = QuadratureGrid::gauss_legendre(j.lo, j.hi, J_ORDER)?;
    let cols = QuadratureGrid::composite(window.lo, window.hi, panel, PANEL_NODES, &[j.lo, j.hi])?;
    let op = super::discretized::discretize_between(kernel, rows, cols);
    Ok(op.matrix().norm_squared())
}

/// Ingredients and value of `M = (1 + ||K_0||)^2 (||1_J P_0||_HS^2 + ||1_J P||_HS^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationBound {
    pub m: f64,
    pub k0_op_norm: f64,
    pub p0_hs_sq: f64,
    pub p_hs_sq: f64,
    /// `||(P_0 - P) 1_J||_op`.
    pub hypothesis_lhs: f64,
    /// `1 / (4 (1 + ||K_0||_op))`.
    pub hypothesis_rhs: f64,
}

impl PerturbationBound {
    /// Right-hand side of the nuclear-norm comparison, `3 M`.
    pub fn nuclear_bound(&self) -> f64 {
        3.0 * self.m
    }
}

/// Nonzero spectrum of `1_J (P_0 - P)^2 1_J` is that of `Q` below; returns `sqrt(lambda_max(Q))`.
fn hypothesis_norm(p: &FiniteRankProjection, p0: &KernelFunction, j: Interval) -> Result<f64> {
    let jg = QuadratureGrid::gauss_legendre(j.lo, j.hi, J_ORDER)?;
    let sw: Vec<f64> = jg.weights.iter().map(|w| w.sqrt()).collect();
    // P_0 phi_k at the J nodes, integrating over the support of P
    let full = p.quadrature(Interval::new(f64::NEG_INFINITY, f64::INFINITY))?;
    let phi_w = p.weighted_values(&full); // rank x N, columns scaled by sqrt(w)
    let sw_full: Vec<f64> = full.weights.iter().map(|w| w.sqrt()).collect();
    let mut k0x = p0.matrix(&jg.nodes, &full.nodes); // mJ x N
    for c in 0..k0x.ncols() {
        k0x.column_mut(c).scale_mut(sw_full[c]);
    }
    let p0_phi = k0x * phi_w.transpose(); // mJ x rank
    let phi_j = DMatrix::from_fn(jg.len(), p.rank(), |a, k| p.eval(jg.nodes[a])[k]);
    let cross = &p0_phi * phi_j.transpose();
    let kp = &phi_j * phi_j.transpose();
    let k0 = p0.matrix(&jg.nodes, &jg.nodes);
    let mut q = DMatrix::from_fn(jg.len(), jg.len(), |a, b| {
        sw[a] * (k0[(a, b)] - cross[(a, b)] - cross[(b, a)] + kp[(a, b)]) * sw[b]
    });
    symmetrize(&mut q);
    let top = *sym_eigenvalues(&q).last().unwrap_or(&0.0);
    Ok(top.max(0.0).sqrt())
}

/// Computes `M` after checking `||(P_0 - P) 1_J||_op <= 1 / (4 (1 + ||K_0||_op))`.
pub fn perturbation_bound_m(
    p: &FiniteRankProjection,
    p0: &KernelFunction,
    j: Interval,
    k0: &ResolventK0,
) -> Result<PerturbationBound> {
    let b = perturbation_bound_unchecked(p, p0, j, k0)?;
    if b.hypothesis_lhs > b.hypothesis_rhs {
        return Err(Error::HypothesisViolated { lhs: b.hypothesis_lhs, rhs: b.hypothesis_rhs });
    }
    Ok(b)
}

/// All ingredients of [`perturbation_bound_m`] without enforcing the hypothesis,
/// for reporting.
pub fn perturbation_bound_unchecked(
    p: &FiniteRankProjection,
    p0: &KernelFunction,
    j: Interval,
    k0: &ResolventK0,
) -> Result<PerturbationBound> {
    let k0_op_norm = k0.op_norm();
    let hypothesis_rhs = 1.0 / (4.0 * (1.0 + k0_op_norm));
    if j.is_empty() {
        return Ok(PerturbationBound {
            m: 0.0,
            k0_op_norm,
            p0_hs_sq: 0.0,
            p_hs_sq: 0.0,
            hypothesis_lhs: 0.0,
            hypothesis_rhs,
        });
    }
    let hypothesis_lhs = hypothesis_norm(p, p0, j)?;
    // both are projections: ||1_J Q||_HS^2 = tr(1_J Q 1_J)
    let jg = QuadratureGrid::gauss_legendre(j.lo, j.hi, J_ORDER)?;
    let p0_hs_sq = jg.integrate(|x| p0.eval(x, x));
    let p_hs_sq = p.gram_on(j)?.trace();
    let m = (1.0 + k0_op_norm).powi(2) * (p0_hs_sq + p_hs_sq);
    Ok(PerturbationBound { m, k0_op_norm, p0_hs_sq, p_hs_sq, hypothesis_lhs, hypothesis_rhs })
}

/// `||P~ - 1_{J^c} P 1_{J^c}||_{S^1}` where `P~` projects onto `1_{J^c} V`.
///
/// Both operators have range in `1_{J^c} V`; with `Z = [Phi~ | Psi]` sampled on a
/// grid, the difference is `Z S Z^T` with `S = diag(I, -I)`, whose nonzero
/// eigenvalues are those of `R S R^T` for the thin QR factor `R` of `Z`.
pub fn conditioned_deviation_s1(p: &FiniteRankProjection, j: Interval) -> Result<f64> {
    let cond = p.condition_on_empty(j)?;
    let grid = p.shared_grid(&cond)?;
    let tilde = cond.weighted_values(&grid); // n x N
    let mut masked = p.weighted_values(&grid);
    for (c, &x) in grid.nodes.iter().enumerate() {
        if j.contains(x) {
            masked.column_mut(c).fill(0.0);
        }
    }
    let n = p.rank();
    let mut z = DMatrix::zeros(grid.len(), 2 * n);
    z.view_mut((0, 0), (grid.len(), n)).copy_from(&tilde.transpose());
    z.view_mut((0, n), (grid.len(), n)).copy_from(&masked.transpose());
    let r = z.qr().r();
    let s = DMatrix::from_fn(2 * n, 2 * n, |a, b| if a != b { 0.0 } else if a < n { 1.0 } else { -1.0 });
    let mut core = &r * s * r.transpose();
    symmetrize(&mut core);
    Ok(sym_eigenvalues(&core).iter().map(|l| l.abs()).sum())
}
