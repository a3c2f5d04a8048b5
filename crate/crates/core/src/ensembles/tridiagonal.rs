use crate::error::{Error, Result};

/// Real symmetric tridiagonal matrix with diagonal `d` and off-diagonal `e`
/// (`e[k]` couples rows `k` and `k + 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    d: Vec<f64>,
    e: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(d: Vec<f64>, e: Vec<f64>) -> Result<Self> {
        if d.is_empty() || e.len() + 1 != d.len() {
            return Err(Error::InvalidArgument(format!(
                "tridiagonal shape mismatch: {} diagonal, {} off-diagonal entries",
                d.len(),
                e.len()
            )));
        }
        Ok(Self { d, e })
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.d
    }

    pub fn off_diagonal(&self) -> &[f64] {
        &self.e
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence via the LDL^T pivots).
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.d.len() {
            let coupling = if i == 0 { 0.0 } else { self.e[i - 1] * self.e[i - 1] / q };
            q = self.d[i] - x - coupling;
            if q == 0.0 {
                q = -f64::EPSILON * (self.d[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn bounds(&self) -> (f64, f64) {
        let n = self.d.len();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            let r = if i > 0 { self.e[i - 1].abs() } else { 0.0 } + if i + 1 < n { self.e[i].abs() } else { 0.0 };
            lo = lo.min(self.d[i] - r);
            hi = hi.max(self.d[i] + r);
        }
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection on the Sturm count.
    pub fn eigenvalue(&self, k: usize) -> Result<f64> {
        if k >= self.dim() {
            return Err(Error::IndexOutOfRange { index: k, lo: 0, hi: self.dim() - 1 });
        }
        let (lo, hi) = self.bounds();
        Ok(self.bisect(k, lo, hi))
    }

    fn bisect(&self, k: usize, mut lo: f64, mut hi: f64) -> f64 {
        // invariant: count_below(lo) <= k < count_below(hi)
        let pad = f64::EPSILON * lo.abs().max(hi.abs()).max(1.0);
        lo -= pad;
        hi += pad;
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
                return mid;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }

    /// Eigenvalues with index in `range` (0-based, ascending).
    pub fn eigenvalues_in(&self, range: std::ops::Range<usize>) -> Vec<f64> {
        let (lo, hi) = self.bounds();
        range.filter(|&k| k < self.dim()).map(|k| self.bisect(k, lo, hi)).collect()
    }

    /// All eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let (lo, hi) = self.bounds();
        (0..self.dim()).map(|k| self.bisect(k, lo, hi)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_eigenvalues;
    use nalgebra::DMatrix;

    #[test]
    fn matches_dense_eigensolver() {
        let d = vec![0.3, -1.2, 2.0, 0.0, 0.7, -0.4];
        let e = vec![1.0, 0.5, -0.8, 1.5, 0.1];
        let t = SymTridiagonal::new(d.clone(), e.clone()).unwrap();
        let n = d.len();
        let m = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                d[i]
            } else if i + 1 == j {
                e[i]
            } else if j + 1 == i {
                e[j]
            } else {
                0.0
            }
        });
        let dense = sym_eigenvalues(&m);
        let ours = t.eigenvalues();
        for (a, b) in dense.iter().zip(&ours) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
        assert_eq!(t.count_below(dense[2] + 1e-9), 3);
        assert!(t.eigenvalue(6).is_err());
    }

    #[test]
    fn second_difference_matrix() {
        // eigenvalues 2 - 2 cos(k pi / (n + 1))
        let n = 50;
        let t = SymTridiagonal::new(vec![2.0; n], vec![-1.0; n - 1]).unwrap();
        for (k, l) in t.eigenvalues().iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((l - exact).abs() < 1e-13);
        }
    }
}
