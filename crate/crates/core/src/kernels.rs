//! Semicircle law, classical locations, the GUE kernel in original and bulk
//! coordinates, the Dyson sine kernel, and k-point correlation determinants.

use crate::basis::FunctionBasis;
use crate::error::{Error, Result};
use crate::hermite::{HermiteBasis, RescaledHermiteBasis};
use nalgebra::DMatrix;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// `(1 / 2 pi) sqrt((4 - u^2)_+)`.
pub fn semicircle_density(u: f64) -> f64 {
    (4.0 - u * u).max(0.0).sqrt() / (2.0 * PI)
}

/// Mass of the semicircle law below `u`, in closed form.
pub fn semicircle_cdf(u: f64) -> f64 {
    if u <= -2.0 {
        return 0.0;
    }
    if u >= 2.0 {
        return 1.0;
    }
    0.5 + u * (4.0 - u * u).sqrt() / (4.0 * PI) + (u / 2.0).asin() / PI
}

/// Energy `u` with `semicircle_cdf(u) = i / n`.
pub fn classical_location(i: usize, n: usize) -> Result<f64> {
    if n == 0 || i == 0 || i > n {
        return Err(Error::IndexOutOfRange { index: i, lo: 1, hi: n.max(1) });
    }
    if i == n {
        return Ok(2.0);
    }
    let target = i as f64 / n as f64;
    if 2 * i == n {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (-2.0f64, 2.0f64);
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if semicircle_cdf(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut u = 0.5 * (lo + hi);
    for _ in 0..50 {
        let f = semicircle_cdf(u) - target;
        let d = semicircle_density(u);
        let mut next = u - f / d;
        if !(next > lo && next < hi) || d == 0.0 {
            next = 0.5 * (lo + hi);
        }
        if f < 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        if (next - u).abs() < 1e-15 {
            u = next;
            break;
        }
        u = next;
    }
    Ok(u)
}

/// `sin(pi (x - y)) / (pi (x - y))`, equal to 1 on the diagonal.
pub fn sine_kernel(x: f64, y: f64) -> f64 {
    let d = x - y;
    if d == 0.0 {
        return 1.0;
    }
    let t = PI * d;
    if t.abs() < 1e-4 {
        // series: 1 - t^2/6 + t^4/120
        let t2 = t * t;
        return 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
    }
    t.sin() / t
}

fn gue_kernel_with(basis: &HermiteBasis, x: f64, y: f64) -> f64 {
    let n = basis.rank();
    let nf = n as f64;
    let (a, b) = if x <= y { (x, y) } else { (y, x) };
    if a == b {
        let (pm2, pm1, pn) = basis.top_triple(a);
        return nf * pm1 * pm1 - (nf * (nf - 1.0)).sqrt() * pm2 * pn;
    }
    if b - a < 1e-3 {
        let va = basis.eval(a);
        let vb = basis.eval(b);
        return va.iter().zip(&vb).map(|(p, q)| p * q).sum();
    }
    let (_, am1, an) = basis.top_triple(a);
    let (_, bm1, bn) = basis.top_triple(b);
    nf.sqrt() * (an * bm1 - am1 * bn) / (a - b)
}

/// `K^(n)(x, y) = sum_{k<n} psi_k(x) psi_k(y)`; Christoffel–Darboux off the diagonal,
/// its explicit limit on the diagonal and direct summation in between.
pub fn gue_kernel(n: usize, x: f64, y: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("GUE kernel needs n >= 1".into()));
    }
    Ok(gue_kernel_with(&HermiteBasis::new(n), x, y))
}

fn check_bulk(u: f64) -> Result<()> {
    if !(u.abs() < 2.0) {
        return Err(Error::InvalidArgument(format!("energy u = {u} is not in the bulk (-2, 2)")));
    }
    Ok(())
}

/// `K^(n)` in bulk coordinates around `u sqrt(n)` with unit mean spacing.
pub fn rescaled_kernel(n: usize, u: f64, x: f64, y: f64) -> Result<f64> {
    check_bulk(u)?;
    if n == 0 {
        return Err(Error::InvalidArgument("GUE kernel needs n >= 1".into()));
    }
    let c = semicircle_density(u) * (n as f64).sqrt();
    let s = u * (n as f64).sqrt();
    Ok(gue_kernel(n, s + x / c, s + y / c)? / c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    Gue { n: usize },
    Rescaled { n: usize, u: f64 },
    Sine,
    Custom,
}

/// How the kernel is evaluated at `x = y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiagonalConvention {
    /// Continuous extension, computed from an explicit limit formula.
    Limit,
    /// Fixed by convention, e.g. `K(x, x) = 1` for the sine kernel.
    Fixed(f64),
}

#[derive(Clone)]
enum Repr {
    Sine,
    Gue(Arc<HermiteBasis>),
    Rescaled(Arc<RescaledHermiteBasis>, Arc<HermiteBasis>),
    Basis(Arc<dyn FunctionBasis>),
    Closure(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

/// A symmetric real kernel with metadata.
#[derive(Clone)]
pub struct KernelFunction {
    kind: KernelKind,
    repr: Repr,
    rank: Option<usize>,
    projection: bool,
}

impl fmt::Debug for KernelFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelFunction")
            .field("kind", &self.kind)
            .field("rank", &self.rank)
            .field("projection", &self.projection)
            .finish()
    }
}

impl KernelFunction {
    pub fn sine() -> Self {
        Self { kind: KernelKind::Sine, repr: Repr::Sine, rank: None, projection: true }
    }

    pub fn gue(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("GUE kernel needs n >= 1".into()));
        }
        Ok(Self {
            kind: KernelKind::Gue { n },
            repr: Repr::Gue(Arc::new(HermiteBasis::new(n))),
            rank: Some(n),
            projection: true,
        })
    }

    pub fn rescaled(n: usize, u: f64) -> Result<Self> {
        check_bulk(u)?;
        if n == 0 {
            return Err(Error::InvalidArgument("GUE kernel needs n >= 1".into()));
        }
        Ok(Self {
            kind: KernelKind::Rescaled { n, u },
            repr: Repr::Rescaled(
                Arc::new(RescaledHermiteBasis::new(n, u)),
                Arc::new(HermiteBasis::new(n)),
            ),
            rank: Some(n),
            projection: true,
        })
    }

    /// `K(x, y) = sum_k b_k(x) b_k(y)`; a projection when the family is orthonormal.
    pub fn from_basis(basis: Arc<dyn FunctionBasis>, orthonormal: bool) -> Self {
        let rank = Some(basis.len());
        Self { kind: KernelKind::Custom, repr: Repr::Basis(basis), rank, projection: orthonormal }
    }

    /// Arbitrary kernel; the evaluator is symmetrized by argument ordering.
    pub fn custom(
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        rank: Option<usize>,
        projection: bool,
    ) -> Self {
        Self { kind: KernelKind::Custom, repr: Repr::Closure(Arc::new(f)), rank, projection }
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn rank(&self) -> Option<usize> {
        self.rank
    }

    pub fn is_projection(&self) -> bool {
        self.projection
    }

    pub fn diagonal_convention(&self) -> DiagonalConvention {
        match self.repr {
            Repr::Sine => DiagonalConvention::Fixed(1.0),
            _ => DiagonalConvention::Limit,
        }
    }

    /// Basis spanning the range, for finite-rank kernels built from one.
    pub fn basis(&self) -> Option<Arc<dyn FunctionBasis>> {
        match &self.repr {
            Repr::Gue(b) => Some(b.clone() as Arc<dyn FunctionBasis>),
            Repr::Rescaled(b, _) => Some(b.clone() as Arc<dyn FunctionBasis>),
            Repr::Basis(b) => Some(b.clone()),
            _ => None,
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let (a, b) = if x <= y { (x, y) } else { (y, x) };
        match &self.repr {
            Repr::Sine => sine_kernel(a, b),
            Repr::Gue(h) => gue_kernel_with(h, a, b),
            Repr::Rescaled(r, h) => {
                let c = r.scale();
                gue_kernel_with(h, r.to_original(a), r.to_original(b)) / c
            }
            Repr::Basis(basis) => {
                let va = basis.eval(a);
                let vb = basis.eval(b);
                va.iter().zip(&vb).map(|(p, q)| p * q).sum()
            }
            Repr::Closure(f) => f(a, b),
        }
    }

    /// Kernel matrix `K(rows[i], cols[j])`. Exactly symmetric when `rows == cols`.
    pub fn matrix(&self, rows: &[f64], cols: &[f64]) -> DMatrix<f64> {
        let same = std::ptr::eq(rows, cols) || rows == cols;
        let mut m = match self.basis() {
            Some(basis) => {
                let r = basis.eval_matrix(rows);
                if same {
                    r.transpose() * &r
                } else {
                    r.transpose() * basis.eval_matrix(cols)
                }
            }
            None => {
                if same {
                    let k = rows.len();
                    let mut m = DMatrix::zeros(k, k);
                    for i in 0..k {
                        for j in i..k {
                            let v = self.eval(rows[i], rows[j]);
                            m[(i, j)] = v;
                            m[(j, i)] = v;
                        }
                    }
                    m
                } else {
                    DMatrix::from_fn(rows.len(), cols.len(), |i, j| self.eval(rows[i], cols[j]))
                }
            }
        };
        if same {
            let k = m.nrows();
            for i in 0..k {
                for j in (i + 1)..k {
                    let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
        }
        m
    }
}

/// `det(K(x_i, x_j))`; the empty determinant is 1.
pub fn correlation_fn(kernel: &KernelFunction, points: &[f64]) -> f64 {
    if points.is_empty() {
        return 1.0;
    }
    kernel.matrix(points, points).determinant()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::QuadratureGrid;

    #[test]
    fn semicircle_values() {
        assert!((semicircle_density(0.0) - 1.0 / PI).abs() < 1e-15);
        assert_eq!(semicircle_density(2.0), 0.0);
        assert_eq!(semicircle_density(3.0), 0.0);
        assert_eq!(semicircle_density(-1.3), semicircle_density(1.3));
        let g = QuadratureGrid::gauss_legendre(-2.0, 2.0, 400).unwrap();
        // sqrt singularity at the ends limits GL accuracy; substitute u = 2 sin t instead
        let t = QuadratureGrid::gauss_legendre(-PI / 2.0, PI / 2.0, 60).unwrap();
        let mass = t.integrate(|t| semicircle_density(2.0 * t.sin()) * 2.0 * t.cos());
        assert!((mass - 1.0).abs() < 1e-10, "mass {mass}");
        assert!((g.integrate(semicircle_density) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn semicircle_cdf_is_antiderivative() {
        for &u in &[-1.9, -1.0, -0.2, 0.0, 0.4, 1.5, 1.99] {
            let h = 1e-5;
            let d = (semicircle_cdf(u + h) - semicircle_cdf(u - h)) / (2.0 * h);
            assert!((d - semicircle_density(u)).abs() < 1e-8);
        }
        assert_eq!(semicircle_cdf(-2.0), 0.0);
        assert_eq!(semicircle_cdf(2.0), 1.0);
    }

    /// Bisection on a quadrature of the density, independent of the closed-form CDF.
    fn quarter_point_oracle() -> f64 {
        let mass_below = |u: f64| {
            let t0 = -PI / 2.0;
            let t1 = (u / 2.0).asin();
            QuadratureGrid::gauss_legendre(t0, t1, 80)
                .unwrap()
                .integrate(|t| semicircle_density(2.0 * t.sin()) * 2.0 * t.cos())
        };
        let (mut lo, mut hi) = (-2.0, 2.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mass_below(mid) < 0.25 {
                lo = mid
            } else {
                hi = mid
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn classical_location_examples() {
        assert_eq!(classical_location(50, 100).unwrap(), 0.0);
        assert_eq!(classical_location(100, 100).unwrap(), 2.0);
        let q = classical_location(25, 100).unwrap();
        let oracle = quarter_point_oracle();
        assert!((q - oracle).abs() < 1e-12, "{q} vs {oracle}");
        assert!((semicircle_cdf(q) - 0.25).abs() < 1e-14);
        assert!(classical_location(0, 10).is_err());
        assert!(classical_location(11, 10).is_err());
    }

    #[test]
    fn classical_location_strictly_increasing() {
        let n = 97;
        let locs: Vec<f64> = (1..=n).map(|i| classical_location(i, n).unwrap()).collect();
        assert!(locs.windows(2).all(|w| w[0] < w[1]));
        assert!(locs.iter().all(|u| (-2.0..=2.0).contains(u)));
    }

    #[test]
    fn gue_kernel_rank_one() {
        let v = gue_kernel(1, 0.0, 0.0).unwrap();
        assert!((v - (2.0 * PI).powf(-0.5)).abs() < 1e-15);
        assert!(gue_kernel(0, 0.0, 0.0).is_err());
    }

    #[test]
    fn gue_kernel_branches_agree() {
        let n = 25;
        let basis = HermiteBasis::new(n);
        let direct = |x: f64, y: f64| -> f64 {
            basis.eval(x).iter().zip(basis.eval(y)).map(|(a, b)| a * b).sum()
        };
        for &(x, y) in &[(0.3, 0.3), (0.3, 0.3005), (0.3, 1.1), (-4.0, 7.0), (9.5, 9.5)] {
            let k = gue_kernel(n, x, y).unwrap();
            assert!((k - direct(x, y)).abs() < 1e-12, "({x},{y}) {k} vs {}", direct(x, y));
            assert_eq!(k, gue_kernel(n, y, x).unwrap());
        }
    }

    #[test]
    fn gue_kernel_trace_is_rank() {
        for n in [1usize, 5, 20] {
            let s = HermiteBasis::new(n).support();
            let g = QuadratureGrid::composite(s.lo, s.hi, 0.25, 16, &[]).unwrap();
            let tr = g.integrate(|x| gue_kernel(n, x, x).unwrap());
            assert!((tr - n as f64).abs() < 1e-6, "n={n} trace {tr}");
        }
    }

    #[test]
    fn sine_kernel_values() {
        assert_eq!(sine_kernel(0.0, 0.0), 1.0);
        assert!(sine_kernel(0.0, 1.0).abs() < 1e-15);
        assert!((sine_kernel(0.0, 0.5) - 2.0 / PI).abs() < 1e-15);
        assert!((sine_kernel(0.0, 1e-6) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn rescaled_kernel_near_sine() {
        let v = rescaled_kernel(400, 0.0, 0.0, 0.0).unwrap();
        assert!((v - 1.0).abs() < 0.05, "{v}");
        let d100 = (rescaled_kernel(100, 0.0, 0.0, 0.5).unwrap() - 2.0 / PI).abs();
        let d400 = (rescaled_kernel(400, 0.0, 0.0, 0.5).unwrap() - 2.0 / PI).abs();
        assert!(d400 < d100, "{d400} !< {d100}");
        assert!(rescaled_kernel(10, 2.0, 0.0, 0.0).is_err());
        assert_eq!(
            rescaled_kernel(60, 0.3, 0.1, 0.8).unwrap(),
            rescaled_kernel(60, 0.3, 0.8, 0.1).unwrap()
        );
    }

    #[test]
    fn rescaled_diagonal_bounded() {
        for n in [50usize, 120] {
            for &u in &[-1.0, 0.0, 1.0] {
                let k = KernelFunction::rescaled(n, u).unwrap();
                for i in 0..40 {
                    let x = -5.0 + 0.25 * i as f64;
                    let v = k.eval(x, x);
                    assert!((0.0..=1.2).contains(&v), "n={n} u={u} x={x} K={v}");
                }
            }
        }
    }

    #[test]
    fn kernel_matrix_matches_pointwise() {
        let k = KernelFunction::rescaled(40, 0.2).unwrap();
        let pts = [-1.0, 0.0, 0.37, 2.5];
        let m = k.matrix(&pts, &pts);
        for i in 0..4 {
            for j in 0..4 {
                assert!((m[(i, j)] - k.eval(pts[i], pts[j])).abs() < 1e-12);
                assert_eq!(m[(i, j)], m[(j, i)]);
            }
        }
    }

    #[test]
    fn correlation_examples() {
        let k = KernelFunction::sine();
        assert_eq!(correlation_fn(&k, &[]), 1.0);
        assert!((correlation_fn(&k, &[0.0]) - 1.0).abs() < 1e-15);
        let two = correlation_fn(&k, &[0.0, 0.5]);
        let oracle = 1.0 - (2.0 / PI) * (2.0 / PI);
        assert!((two - oracle).abs() < 1e-14);
        assert!(correlation_fn(&k, &[0.3, 0.3]).abs() < 1e-15);
    }
}
