use crate::basis::FunctionBasis;
use crate::error::{Error, Result};
use crate::hermite::{HermiteBasis, RescaledHermiteBasis};
use crate::interval::Interval;
use crate::kernels::KernelFunction;
use crate::linalg::{sym_apply, sym_eigenvalues, symmetrize};
use crate::quadrature::QuadratureGrid;
use nalgebra::DMatrix;
use std::sync::Arc;

const QUAD_ORDER: usize = 16;
/// Smallest admissible Gram eigenvalue of the masked family when conditioning.
pub const CONDITIONING_TOL: f64 = 1e-10;

/// Orthogonal projection onto an `n`-dimensional subspace `V`, stored as an
/// orthonormal family `phi_k = 1_{mask^c} sum_j C_jk b_j` over a base family `b`.
/// The mask is the union of intervals the process has been conditioned to avoid.
#[derive(Debug, Clone)]
pub struct FiniteRankProjection {
    base: Arc<dyn FunctionBasis>,
    coeffs: DMatrix<f64>,
    excluded: Vec<Interval>,
    gram_tol: f64,
}

impl FiniteRankProjection {
    /// Projection whose range is spanned by an orthonormal base family.
    pub fn from_orthonormal(base: Arc<dyn FunctionBasis>) -> Self {
        let n = base.len();
        Self { base, coeffs: DMatrix::identity(n, n), excluded: vec![], gram_tol: 1e-8 }
    }

    /// Projection onto the span of an arbitrary linearly independent family (symmetric orthonormalization).
    pub fn spanned_by(base: Arc<dyn FunctionBasis>) -> Result<Self> {
        let n = base.len();
        let raw = Self { base, coeffs: DMatrix::identity(n, n), excluded: vec![], gram_tol: 1e-8 };
        let g = raw.gram();
        let min = sym_eigenvalues(&g).first().copied().unwrap_or(0.0);
        if !(min > CONDITIONING_TOL) {
            return Err(Error::DegenerateConditioning(min));
        }
        let coeffs = sym_apply(&g, |l| l.powf(-0.5));
        Ok(Self { coeffs, ..raw })
    }

    /// Explicit coefficients and mask; the caller vouches for orthonormality.
    pub fn from_parts(base: Arc<dyn FunctionBasis>, coeffs: DMatrix<f64>, excluded: Vec<Interval>) -> Self {
        assert_eq!(coeffs.nrows(), base.len());
        Self { base, coeffs, excluded, gram_tol: 1e-8 }
    }

    /// `P^(n)`, the GUE projection in original coordinates.
    pub fn gue(n: usize) -> Self {
        Self::from_orthonormal(Arc::new(HermiteBasis::new(n)))
    }

    /// The GUE projection in bulk coordinates around energy `u`.
    pub fn rescaled_gue(n: usize, u: f64) -> Self {
        Self::from_orthonormal(Arc::new(RescaledHermiteBasis::new(n, u)))
    }

    pub fn rank(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn base(&self) -> &Arc<dyn FunctionBasis> {
        &self.base
    }

    pub fn coeffs(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    pub fn excluded(&self) -> &[Interval] {
        &self.excluded
    }

    pub fn support(&self) -> Interval {
        self.base.support()
    }

    pub fn gram_tolerance(&self) -> f64 {
        self.gram_tol
    }

    fn masked(&self, x: f64) -> bool {
        self.excluded.iter().any(|e| e.contains(x))
    }

    /// Orthonormal basis functions at `x`.
    pub fn eval(&self, x: f64) -> Vec<f64> {
        if self.masked(x) {
            return vec![0.0; self.rank()];
        }
        let b = nalgebra::DVector::from_vec(self.base.eval(x));
        (self.coeffs.transpose() * b).iter().copied().collect()
    }

    /// Kernel `sum_k phi_k(x) phi_k(y)`.
    pub fn kernel_at(&self, x: f64, y: f64) -> f64 {
        let a = self.eval(x);
        let b = self.eval(y);
        a.iter().zip(&b).map(|(p, q)| p * q).sum()
    }

    /// The projection as a kernel function.
    pub fn to_kernel(&self) -> KernelFunction {
        let me = self.clone();
        KernelFunction::custom(move |x, y| me.kernel_at(x, y), Some(self.rank()), true)
    }

    /// Quadrature covering `interval` within the support, minus the mask.
    pub fn quadrature(&self, interval: Interval) -> Result<QuadratureGrid> {
        QuadratureGrid::covering(interval, self.support(), &self.excluded, self.base.panel_width(), QUAD_ORDER)
    }

    /// `rank x nodes` matrix of the orthonormal family, each column scaled by `sqrt(w)`.
    pub fn weighted_values(&self, grid: &QuadratureGrid) -> DMatrix<f64> {
        let mut b = self.base.eval_matrix(&grid.nodes);
        for (j, &x) in grid.nodes.iter().enumerate() {
            let s = if self.masked(x) { 0.0 } else { grid.weights[j].sqrt() };
            b.column_mut(j).scale_mut(s);
        }
        self.coeffs.transpose() * b
    }

    /// `G_ij = int_A phi_i phi_j` for a union `A` of intervals (assumed disjoint).
    /// The nonzero eigenvalues of `G` are those of `1_A P 1_A`.
    pub fn gram_on_set(&self, set: &[Interval]) -> Result<DMatrix<f64>> {
        let mut g = DMatrix::zeros(self.rank(), self.rank());
        for piece in set {
            if piece.is_empty() {
                continue;
            }
            let grid = self.quadrature(*piece)?;
            if grid.is_empty() {
                continue;
            }
            let v = self.weighted_values(&grid);
            g += &v * v.transpose();
        }
        symmetrize(&mut g);
        Ok(g)
    }

    pub fn gram_on(&self, interval: Interval) -> Result<DMatrix<f64>> {
        self.gram_on_set(&[interval])
    }

    /// Gram matrix over the whole line; the identity up to quadrature error.
    pub fn gram(&self) -> DMatrix<f64> {
        self.gram_on(Interval::new(f64::NEG_INFINITY, f64::INFINITY))
            .expect("support quadrature")
    }

    pub fn gram_error(&self) -> f64 {
        let n = self.rank();
        (self.gram() - DMatrix::<f64>::identity(n, n)).amax()
    }

    /// Projection onto `1_{J^c} V`: the law of the process conditioned on `J` being empty.
    pub fn condition_on_empty(&self, j: Interval) -> Result<Self> {
        if j.is_empty() {
            return Ok(self.clone());
        }
        let mut excluded = self.excluded.clone();
        if !excluded.contains(&j) {
            excluded.push(j);
        }
        let gj = self.gram_on(j)?;
        if gj.amax() == 0.0 {
            return Ok(Self { excluded, ..self.clone() });
        }
        let n = self.rank();
        let g = DMatrix::identity(n, n) - gj;
        let min = sym_eigenvalues(&g).first().copied().unwrap_or(0.0);
        if !(min > CONDITIONING_TOL) {
            return Err(Error::DegenerateConditioning(min));
        }
        let coeffs = &self.coeffs * sym_apply(&g, |l| l.powf(-0.5));
        Ok(Self { base: self.base.clone(), coeffs, excluded, gram_tol: self.gram_tol })
    }

    /// Quadrature over the support with panel edges at every mask boundary of either projection.
    pub(crate) fn shared_grid(&self, other: &Self) -> Result<QuadratureGrid> {
        let s = self.support();
        let mut cuts = vec![];
        for e in self.excluded.iter().chain(&other.excluded) {
            cuts.push(e.lo);
            cuts.push(e.hi);
        }
        QuadratureGrid::composite(s.lo, s.hi, self.base.panel_width(), QUAD_ORDER, &cuts)
    }

    /// `||P - Q||_HS` for two projections over the same base family, from the
    /// explicitly assembled kernel difference on a shared grid.
    pub fn hs_distance(&self, other: &Self) -> Result<f64> {
        if !Arc::ptr_eq(&self.base, &other.base) {
            return Err(Error::InvalidArgument("HS distance needs a shared base family".into()));
        }
        let grid = self.shared_grid(other)?;
        let a = self.weighted_values(&grid);
        let b = other.weighted_values(&grid);
        let d = a.transpose() * &a - b.transpose() * &b;
        Ok(d.norm())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::ClosureBasis;

    /// Modified Gram–Schmidt on `1_{J^c} phi_i`, with inner products by quadrature.
    fn gram_schmidt_oracle(p: &FiniteRankProjection, j: Interval) -> FiniteRankProjection {
        let s = p.support();
        let grid = QuadratureGrid::composite(s.lo, s.hi, p.base().panel_width(), 16, &[j.lo, j.hi]).unwrap();
        let masked: Vec<Vec<f64>> = grid
            .nodes
            .iter()
            .map(|&x| if j.contains(x) { vec![0.0; p.rank()] } else { p.base().eval(x) })
            .collect();
        let n = p.rank();
        let dot = |c1: &[f64], c2: &[f64]| -> f64 {
            grid.weights
                .iter()
                .zip(&masked)
                .map(|(w, b)| {
                    let f: f64 = c1.iter().zip(b).map(|(c, v)| c * v).sum();
                    let g: f64 = c2.iter().zip(b).map(|(c, v)| c * v).sum();
                    w * f * g
                })
                .sum()
        };
        let mut cols: Vec<Vec<f64>> = vec![];
        for k in 0..n {
            let mut c: Vec<f64> = p.coeffs().column(k).iter().copied().collect();
            for q in &cols {
                let r = dot(&c, q);
                for (ci, qi) in c.iter_mut().zip(q) {
                    *ci -= r * qi;
                }
            }
            let norm = dot(&c, &c).sqrt();
            c.iter_mut().for_each(|v| *v /= norm);
            cols.push(c);
        }
        let coeffs = DMatrix::from_fn(p.base().len(), n, |i, k| cols[k][i]);
        FiniteRankProjection::from_parts(p.base().clone(), coeffs, vec![j])
    }

    #[test]
    fn hermite_projection_is_orthonormal() {
        let p = FiniteRankProjection::gue(30);
        assert!(p.gram_error() < 1e-8);
    }

    #[test]
    fn conditioning_matches_gram_schmidt() {
        let j = Interval::new(0.0, 1.0);
        for n in [2usize, 7, 20] {
            let p = FiniteRankProjection::gue(n);
            let cond = p.condition_on_empty(j).unwrap();
            let oracle = gram_schmidt_oracle(&p, j);
            let d = cond.hs_distance(&oracle).unwrap();
            assert!(d < 1e-10, "n={n} HS distance {d}");
            assert_eq!(cond.rank(), n);
            assert!(cond.gram_error() < 1e-8);
        }
    }

    #[test]
    fn conditioning_is_idempotent() {
        let j = Interval::new(-0.5, 0.7);
        let p = FiniteRankProjection::rescaled_gue(25, 0.3);
        let once = p.condition_on_empty(j).unwrap();
        let twice = once.condition_on_empty(j).unwrap();
        assert!(once.hs_distance(&twice).unwrap() < 1e-10);
        assert_eq!(once.excluded(), twice.excluded());
    }

    #[test]
    fn conditioning_away_from_support_is_identity() {
        // two bumps living on [2, 4]; J = [0, 1] misses them entirely
        let basis = ClosureBasis::new(2, Interval::new(2.0, 4.0), 0.25, |x, out| {
            let t = (x - 2.0) / 2.0 * std::f64::consts::PI;
            out[0] = t.sin();
            out[1] = (2.0 * t).sin();
        });
        let p = FiniteRankProjection::from_orthonormal(Arc::new(basis));
        let c = p.condition_on_empty(Interval::new(0.0, 1.0)).unwrap();
        assert_eq!(c.coeffs(), p.coeffs());
        assert_eq!(p.hs_distance(&c).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_conditioning_detected() {
        // one basis function lives entirely inside J
        let basis = ClosureBasis::new(2, Interval::new(0.0, 4.0), 0.25, |x, out| {
            out[0] = if x <= 1.0 { (x * std::f64::consts::PI).sin() } else { 0.0 };
            out[1] = if x >= 2.0 { ((x - 2.0) * std::f64::consts::PI / 2.0).sin() } else { 0.0 };
        });
        let p = FiniteRankProjection::spanned_by(Arc::new(basis)).unwrap();
        let r = p.condition_on_empty(Interval::new(0.0, 1.0));
        assert!(matches!(r, Err(Error::DegenerateConditioning(_))));
    }

    #[test]
    fn empty_condition_is_noop() {
        let p = FiniteRankProjection::gue(4);
        let c = p.condition_on_empty(Interval::new(0.3, 0.3)).unwrap();
        assert!(c.excluded().is_empty());
    }
}
