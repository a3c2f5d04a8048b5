//! Orthonormal Hermite functions `psi_k(x) = P_k(x) e^{-x^2/4}`, where `P_k` are the
//! orthonormal polynomials for the weight `e^{-x^2/2}`.
//!
//! The three-term recurrence `sqrt(k+1) psi_{k+1} = x psi_k - sqrt(k) psi_{k-1}` is run on
//! mantissas with a shared base-2 exponent, so `e^{-x^2/4}` never underflows before the
//! polynomial growth has been applied. Valid for `n <= 4096`, `|x| <= 3 sqrt(n)` and beyond.

use crate::basis::FunctionBasis;
use crate::interval::Interval;
use std::f64::consts::{LN_2, PI};

const RESCALE_EXP: i64 = 256;

/// `m * 2^e` without intermediate overflow or underflow of the power.
pub(crate) fn scale_pow2(mut m: f64, mut e: i64) -> f64 {
    while e > 1000 {
        m *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        m *= 2f64.powi(-1000);
        e += 1000;
        if m == 0.0 {
            return 0.0;
        }
    }
    m * 2f64.powi(e as i32)
}

/// The first `n` Hermite functions.
#[derive(Debug, Clone)]
pub struct HermiteBasis {
    n: usize,
    sqrt: Vec<f64>,
    support: Interval,
}

impl HermiteBasis {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Hermite basis needs at least one function");
        let sqrt = (0..=n + 1).map(|k| (k as f64).sqrt()).collect();
        let mut basis = Self { n, sqrt, support: Interval::new(f64::NEG_INFINITY, f64::INFINITY) };
        basis.support = basis.find_support();
        basis
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    /// Runs the scaled recurrence up to index `top` inclusive, handing every value to `sink`.
    fn recur(&self, x: f64, top: usize, mut sink: impl FnMut(usize, f64)) {
        let l2 = -x * x / (4.0 * LN_2) - 0.25 * (2.0 * PI).log2();
        let e0 = l2.floor();
        let mut e = e0 as i64;
        let mut cur = (l2 - e0).exp2();
        let mut prev = 0.0;
        sink(0, scale_pow2(cur, e));
        for k in 1..=top {
            let next = (x * cur - self.sqrt[k - 1] * prev) / self.sqrt[k];
            prev = cur;
            cur = next;
            if cur.abs() > 2f64.powi(RESCALE_EXP as i32) {
                let s = 2f64.powi(-RESCALE_EXP as i32);
                cur *= s;
                prev *= s;
                e += RESCALE_EXP;
            }
            sink(k, scale_pow2(cur, e));
        }
    }

    /// `psi_k(x)` for a single `k` (which may exceed the basis rank by one).
    pub fn psi(&self, k: usize, x: f64) -> f64 {
        assert!(k <= self.n, "index beyond recurrence table");
        let mut v = 0.0;
        self.recur(x, k, |j, val| {
            if j == k {
                v = val
            }
        });
        v
    }

    /// `(psi_{n-2}, psi_{n-1}, psi_n)` at `x`, with `psi_{-1} = 0`.
    pub fn top_triple(&self, x: f64) -> (f64, f64, f64) {
        let n = self.n;
        let mut t = (0.0, 0.0, 0.0);
        self.recur(x, n, |j, val| {
            if j + 2 == n {
                t.0 = val
            } else if j + 1 == n {
                t.1 = val
            } else if j == n {
                t.2 = val
            }
        });
        t
    }

    fn find_support(&self) -> Interval {
        let mut buf = vec![0.0; self.n];
        let mut x = 2.0 * (self.n as f64).sqrt();
        loop {
            self.eval_into(x, &mut buf);
            if buf.iter().all(|v| v.abs() < 1e-17) {
                return Interval::new(-x, x);
            }
            x += 0.25;
        }
    }
}

impl FunctionBasis for HermiteBasis {
    fn len(&self) -> usize {
        self.n
    }

    fn eval_into(&self, x: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.n);
        self.recur(x, self.n - 1, |k, v| out[k] = v);
    }

    fn support(&self) -> Interval {
        self.support
    }

    fn panel_width(&self) -> f64 {
        PI / (self.n as f64).sqrt()
    }
}

/// Hermite functions in bulk coordinates around energy `u`:
/// `phi_k(x) = psi_k(u sqrt(n) + x / c) / sqrt(c)` with `c = rho_sc(u) sqrt(n)`.
/// These span the range of the rescaled projection and stay orthonormal.
#[derive(Debug, Clone)]
pub struct RescaledHermiteBasis {
    inner: HermiteBasis,
    u: f64,
    shift: f64,
    scale: f64,
}

impl RescaledHermiteBasis {
    pub fn new(n: usize, u: f64) -> Self {
        assert!(u.abs() < 2.0, "bulk energy must lie in (-2, 2)");
        let inner = HermiteBasis::new(n);
        let scale = crate::kernels::semicircle_density(u) * (n as f64).sqrt();
        Self { inner, u, shift: u * (n as f64).sqrt(), scale }
    }

    pub fn energy(&self) -> f64 {
        self.u
    }

    /// `rho_sc(u) sqrt(n)`: rescaled units per original unit.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn to_original(&self, x: f64) -> f64 {
        self.shift + x / self.scale
    }

    pub fn to_rescaled(&self, y: f64) -> f64 {
        (y - self.shift) * self.scale
    }
}

impl FunctionBasis for RescaledHermiteBasis {
    fn len(&self) -> usize {
        self.inner.n
    }

    fn eval_into(&self, x: f64, out: &mut [f64]) {
        self.inner.eval_into(self.to_original(x), out);
        let norm = self.scale.sqrt().recip();
        out.iter_mut().for_each(|v| *v *= norm);
    }

    fn support(&self) -> Interval {
        let s = self.inner.support();
        Interval::new(self.to_rescaled(s.lo), self.to_rescaled(s.hi))
    }

    fn panel_width(&self) -> f64 {
        self.inner.panel_width() * self.scale
    }
}
