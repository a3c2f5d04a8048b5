//! Gauss–Legendre rules and composite quadrature grids.
//!
//! Nodes are the roots of the Legendre polynomial `P_m`, found by Newton
//! iteration from the Tricomi-style initial guess; weights follow from
//! `2 / ((1 - x^2) P_m'(x)^2)`.

use crate::error::{Error, Result};
use crate::interval::Interval;
use std::f64::consts::PI;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let m = order;
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        for i in 0..(m + 1) / 2 {
            // guess for the i-th largest root
            let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(m, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(m, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[m - 1 - i] = x;
            weights[i] = w;
            weights[m - 1 - i] = w;
        }
        if m % 2 == 1 {
            nodes[m / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }
}

/// `(P_m(x), P_m'(x))` by the three-term recurrence.
fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let mf = m as f64;
    let d = mf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A set of quadrature nodes and positive weights covering some region of the line.
#[derive(Debug, Clone, Default)]
pub struct QuadratureGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Single Gauss–Legendre panel on `[a, b]`.
    pub fn gauss_legendre(a: f64, b: f64, order: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || !(a < b) {
            return Err(Error::InvalidArgument(format!(
                "quadrature interval [{a}, {b}] must be finite and non-empty"
            )));
        }
        if order < 1 {
            return Err(Error::InvalidArgument("quadrature order must be >= 1".into()));
        }
        let rule = GaussLegendre::new(order);
        Ok(Self::from_rule(&rule, a, b))
    }

    fn from_rule(rule: &GaussLegendre, a: f64, b: f64) -> Self {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        Self {
            nodes: rule.nodes.iter().map(|t| mid + half * t).collect(),
            weights: rule.weights.iter().map(|w| half * w).collect(),
        }
    }

    /// Composite rule: `[a, b]` split into panels no wider than `panel_width`,
    /// with additional panel edges at every `breakpoints` entry inside `(a, b)`.
    pub fn composite(
        a: f64,
        b: f64,
        panel_width: f64,
        order: usize,
        breakpoints: &[f64],
    ) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || !(a < b) {
            return Err(Error::InvalidArgument(format!(
                "quadrature interval [{a}, {b}] must be finite and non-empty"
            )));
        }
        if !(panel_width > 0.0) {
            return Err(Error::InvalidArgument("panel width must be positive".into()));
        }
        let mut edges = vec![a, b];
        edges.extend(breakpoints.iter().copied().filter(|&c| c > a && c < b));
        edges.sort_by(|x, y| x.partial_cmp(y).unwrap());
        edges.dedup();
        let rule = GaussLegendre::new(order);
        let mut grid = Self::empty();
        for w in edges.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let panels = ((hi - lo) / panel_width).ceil().max(1.0) as usize;
            let h = (hi - lo) / panels as f64;
            for p in 0..panels {
                let pa = lo + p as f64 * h;
                let pb = if p + 1 == panels { hi } else { pa + h };
                grid.extend(&Self::from_rule(&rule, pa, pb));
            }
        }
        Ok(grid)
    }

    /// Composite rule on the part of `interval` inside `window`, skipping `excluded` pieces.
    /// Returns an empty grid when nothing remains.
    pub fn covering(
        interval: Interval,
        window: Interval,
        excluded: &[Interval],
        panel_width: f64,
        order: usize,
    ) -> Result<Self> {
        let mut pieces = vec![];
        if let Some(base) = interval.intersect(&window) {
            pieces.push(base);
        }
        for ex in excluded {
            pieces = pieces.into_iter().flat_map(|p| p.subtract(ex)).collect();
        }
        let mut grid = Self::empty();
        for p in pieces {
            if p.length() > 0.0 {
                grid.extend(&Self::composite(p.lo, p.hi, panel_width, order, &[])?);
            }
        }
        Ok(grid)
    }

    pub fn extend(&mut self, other: &Self) {
        self.nodes.extend_from_slice(&other.nodes);
        self.weights.extend_from_slice(&other.weights);
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for m in [1, 2, 5, 20, 200, 801] {
            let r = GaussLegendre::new(m);
            let s: f64 = r.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "m={m} sum={s}");
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2m_minus_1() {
        let m = 7;
        let g = QuadratureGrid::gauss_legendre(-1.0, 2.0, m).unwrap();
        for deg in 0..(2 * m) {
            let exact = (2f64.powi(deg as i32 + 1) - (-1f64).powi(deg as i32 + 1)) / (deg as f64 + 1.0);
            let got = g.integrate(|x| x.powi(deg as i32));
            assert!((got - exact).abs() < 1e-12 * exact.abs().max(1.0), "deg {deg}");
        }
    }

    #[test]
    fn nodes_sorted_and_symmetric() {
        let r = GaussLegendre::new(64);
        assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
        for i in 0..64 {
            assert!((r.nodes[i] + r.nodes[63 - i]).abs() < 1e-15);
        }
    }

    #[test]
    fn composite_respects_breakpoints_and_exclusions() {
        let g = QuadratureGrid::covering(
            Interval::new(f64::NEG_INFINITY, 5.0),
            Interval::new(-3.0, 10.0),
            &[Interval::new(0.0, 1.0)],
            0.5,
            8,
        )
        .unwrap();
        assert!(g.nodes.iter().all(|&x| (-3.0..=5.0).contains(&x) && !(0.0..=1.0).contains(&x)));
        let total: f64 = g.weights.iter().sum();
        assert!((total - 7.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_intervals() {
        assert!(QuadratureGrid::gauss_legendre(1.0, 1.0, 4).is_err());
        assert!(QuadratureGrid::gauss_legendre(2.0, 1.0, 4).is_err());
        assert!(QuadratureGrid::composite(0.0, f64::INFINITY, 1.0, 4, &[]).is_err());
    }
}
