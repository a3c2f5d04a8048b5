//! Laws of the counting function `#(Sigma ∩ I)` of a determinantal process with
//! projection kernel: a sum of independent Bernoulli variables whose parameters
//! are the eigenvalues of `1_I P 1_I`.

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::kernels::KernelFunction;
use crate::linalg::sym_eigenvalues;
use crate::operators::{discretize, operator_spectrum, FiniteRankProjection, EIGEN_DROP_TOL, EIGEN_FAIL_TOL};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Poisson-binomial law with parameters in `(0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountingLaw {
    lambdas: Vec<f64>,
    /// Total of the eigenvalues dropped as numerically zero; bounds the bias in `mu`.
    dropped_mass: f64,
}

impl CountingLaw {
    /// Builds a law from raw eigenvalues: values below `1e-12` are dropped,
    /// values within `1e-6` of `[0, 1]` are clamped, anything further out is an error.
    pub fn from_eigenvalues(values: &[f64]) -> Result<Self> {
        let mut lambdas = Vec::with_capacity(values.len());
        let mut dropped_mass = 0.0;
        for &l in values {
            if !(l >= -EIGEN_FAIL_TOL && l <= 1.0 + EIGEN_FAIL_TOL) {
                return Err(Error::Discretization { value: l, tol: EIGEN_FAIL_TOL });
            }
            let l = l.clamp(0.0, 1.0);
            if l < EIGEN_DROP_TOL {
                dropped_mass += l;
            } else {
                lambdas.push(l);
            }
        }
        lambdas.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { lambdas, dropped_mass })
    }

    pub fn empty() -> Self {
        Self { lambdas: vec![], dropped_mass: 0.0 }
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn dropped_mass(&self) -> f64 {
        self.dropped_mass
    }

    /// Mean, `tr(1_I P 1_I)`.
    pub fn mu(&self) -> f64 {
        self.lambdas.iter().sum()
    }

    /// Variance, `tr((1 - 1_I P 1_I) 1_I P 1_I)`.
    pub fn sigma2(&self) -> f64 {
        self.lambdas.iter().map(|l| l * (1.0 - l)).sum()
    }

    /// Full pmf on `0..=len`.
    pub fn pmf(&self) -> Vec<f64> {
        poisson_binomial(&self.lambdas)
    }

    pub fn hole_probability(&self) -> f64 {
        hole_probability(self)
    }
}

/// Dynamic-programming convolution of Bernoulli laws; `out[m] = P(sum = m)`.
fn poisson_binomial(lambdas: &[f64]) -> Vec<f64> {
    let mut pmf = vec![0.0; lambdas.len() + 1];
    pmf[0] = 1.0;
    for (k, &l) in lambdas.iter().enumerate() {
        for m in (1..=k + 1).rev() {
            pmf[m] = pmf[m] * (1.0 - l) + pmf[m - 1] * l;
        }
        pmf[0] *= 1.0 - l;
    }
    pmf
}

/// `P(#(Sigma ∩ I) = m)`; zero beyond the number of Bernoulli factors.
pub fn poisson_binomial_pmf(law: &CountingLaw, m: usize) -> f64 {
    if m > law.len() {
        return 0.0;
    }
    poisson_binomial(&law.lambdas)[m]
}

/// `prod (1 - lambda_i)`.
pub fn hole_probability(law: &CountingLaw) -> f64 {
    law.lambdas.iter().map(|l| 1.0 - l).product()
}

/// Counting law of a kernel on a compact interval, from the discretized spectrum.
pub fn counting_law(kernel: &KernelFunction, interval: Interval, order: usize) -> Result<CountingLaw> {
    if interval.is_empty() {
        return Ok(CountingLaw::empty());
    }
    let op = discretize(kernel, interval, order)?;
    CountingLaw::from_eigenvalues(&operator_spectrum(&op)?)
}

/// Counting law of a finite-rank projection on a union of disjoint intervals
/// (half-infinite pieces allowed). The nonzero spectrum of `1_A P 1_A` is that
/// of the `rank x rank` Gram matrix of the basis on `A`.
pub fn counting_law_on_set(p: &FiniteRankProjection, set: &[Interval]) -> Result<CountingLaw> {
    let g = p.gram_on_set(set)?;
    CountingLaw::from_eigenvalues(&sym_eigenvalues(&g))
}

pub fn counting_law_projection(p: &FiniteRankProjection, interval: Interval) -> Result<CountingLaw> {
    counting_law_on_set(p, &[interval])
}

/// Gaussian density at `m` and the error budget `sigma^{-1.7}`.
pub fn gaussian_pmf_approx(mu: f64, sigma2: f64, m: i64) -> Result<(f64, f64)> {
    if !(sigma2 > 0.0) || !mu.is_finite() {
        return Err(Error::InvalidArgument(format!("need sigma2 > 0, got {sigma2}")));
    }
    let sigma = sigma2.sqrt();
    let z = (m as f64 - mu) / sigma;
    let density = (-0.5 * z * z).exp() / ((2.0 * PI).sqrt() * sigma);
    Ok((density, sigma.powf(-1.7)))
}

/// `(tr(P~ 1_I), tr(P~ 1_{I^c} P~ 1_I))` for the projection conditioned on `J` empty.
pub fn conditional_counting_stats(v: &FiniteRankProjection, j: Interval, i: Interval) -> Result<(f64, f64)> {
    if j.overlaps(&i) {
        return Err(Error::InvalidArgument("I and J must be disjoint".into()));
    }
    let cond = v.condition_on_empty(j)?;
    let g = cond.gram_on(i)?;
    let mu = g.trace();
    // tr(P 1_{I^c} P 1_I) = tr(P 1_I) - tr((P 1_I)^2)
    let sigma2 = (mu - g.norm_squared()).max(0.0);
    Ok((mu, sigma2))
}

/// Pmf of `N_{(-inf, x)}` jointly with `[x, x + s]` empty:
/// `P(N = i, hole) = P(hole) * P~(N = i)` for `i = 0..=rank`.
pub fn joint_count_distribution(v: &FiniteRankProjection, x: f64, s: f64) -> Result<Vec<f64>> {
    if !(s >= 0.0) {
        return Err(Error::InvalidArgument(format!("gap length must be nonnegative, got {s}")));
    }
    let below = Interval::below(x);
    let mut out = vec![0.0; v.rank() + 1];
    if s == 0.0 {
        for (m, p) in counting_law_projection(v, below)?.pmf().into_iter().enumerate() {
            out[m] = p;
        }
        return Ok(out);
    }
    let j = Interval::new(x, x + s);
    let hole = hole_probability(&counting_law_projection(v, j)?);
    let cond = v.condition_on_empty(j)?;
    for (m, p) in counting_law_projection(&cond, below)?.pmf().into_iter().enumerate() {
        out[m] = hole * p;
    }
    Ok(out)
}

/// `P(N_{(-inf, x)} = i and N_{[x, x+s]} = 0)`, exactly up to quadrature.
pub fn joint_count_probability(v: &FiniteRankProjection, x: f64, i: usize, s: f64) -> Result<f64> {
    if i > v.rank() {
        return Ok(0.0);
    }
    Ok(joint_count_distribution(v, x, s)?[i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(l: &[f64]) -> Vec<f64> {
        let k = l.len();
        let mut out = vec![0.0; k + 1];
        for mask in 0u32..(1 << k) {
            let mut p = 1.0;
            for (b, &lb) in l.iter().enumerate() {
                p *= if mask >> b & 1 == 1 { lb } else { 1.0 - lb };
            }
            out[mask.count_ones() as usize] += p;
        }
        out
    }

    #[test]
    fn trivial_pmfs() {
        let law = CountingLaw::from_eigenvalues(&[0.3]).unwrap();
        assert_eq!(poisson_binomial_pmf(&law, 1), 0.3);
        assert_eq!(poisson_binomial_pmf(&law, 2), 0.0);
        let law = CountingLaw::from_eigenvalues(&[0.5, 0.5]).unwrap();
        assert_eq!(poisson_binomial_pmf(&law, 1), 0.5);
        assert_eq!(hole_probability(&CountingLaw::empty()), 1.0);
        assert_eq!(hole_probability(&CountingLaw::from_eigenvalues(&[0.2, 1.0]).unwrap()), 0.0);
    }

    #[test]
    fn matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let l: Vec<f64> = (0..10).map(|_| rng.random_range(0.01..1.0)).collect();
            let law = CountingLaw::from_eigenvalues(&l).unwrap();
            let dp = law.pmf();
            let bf = brute_force(law.lambdas());
            for m in 0..=10 {
                assert!((dp[m] - bf[m]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn moments_and_log_concavity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let l: Vec<f64> = (0..60).map(|_| rng.random_range(0.0..1.0)).collect();
        let law = CountingLaw::from_eigenvalues(&l).unwrap();
        let pmf = law.pmf();
        assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mean: f64 = pmf.iter().enumerate().map(|(m, p)| m as f64 * p).sum();
        let var: f64 = pmf.iter().enumerate().map(|(m, p)| (m as f64 - mean).powi(2) * p).sum();
        assert!((mean - law.mu()).abs() < 1e-10);
        assert!((var - law.sigma2()).abs() < 1e-10);
        for m in 1..pmf.len() - 1 {
            assert!(pmf[m] * pmf[m] >= pmf[m - 1] * pmf[m + 1] * (1.0 - 1e-9));
        }
    }

    #[test]
    fn fair_coins() {
        let law = CountingLaw::from_eigenvalues(&[0.5; 100]).unwrap();
        let exact = poisson_binomial_pmf(&law, 50);
        // C(100, 50) / 2^100 via log-gamma
        let oracle = (statrs::function::gamma::ln_gamma(101.0)
            - 2.0 * statrs::function::gamma::ln_gamma(51.0)
            - 100.0 * 2f64.ln())
        .exp();
        assert!((exact - oracle).abs() < 1e-12);
        let (approx, budget) = gaussian_pmf_approx(50.0, 25.0, 50).unwrap();
        assert!((approx - 0.079788).abs() < 1e-6);
        assert!((approx - exact).abs() <= budget);
        assert!((approx - exact).abs() <= 0.0026);
        assert!(gaussian_pmf_approx(50.0, 25.0, 100).unwrap().0 <= 1e-20);
        assert_eq!(gaussian_pmf_approx(3.0, 2.0, 5).unwrap().0, gaussian_pmf_approx(3.0, 2.0, 1).unwrap().0);
        assert!(gaussian_pmf_approx(0.0, 0.0, 0).is_err());
    }

    #[test]
    fn sine_law_against_determinant() {
        let k = KernelFunction::sine();
        let law = counting_law(&k, Interval::new(0.0, 1.0), 40).unwrap();
        assert!((law.mu() - 1.0).abs() < 1e-8);
        let half = Interval::new(0.0, 0.5);
        let law = counting_law(&k, half, 40).unwrap();
        let det = crate::operators::fredholm_det(&discretize(&k, half, 40).unwrap());
        assert!((law.hole_probability() - det).abs() < 1e-10);
        assert!(counting_law(&k, Interval::new(1.0, 1.0), 40).unwrap().is_empty());
    }

    #[test]
    fn gue_full_capture() {
        let k = KernelFunction::gue(10).unwrap();
        let law = counting_law(&k, Interval::new(-20.0, 20.0), 200).unwrap();
        assert!((law.mu() - 10.0).abs() < 1e-6);
        assert!(law.sigma2() < 1e-6);
    }

    #[test]
    fn joint_sums_to_hole_probability() {
        let v = FiniteRankProjection::rescaled_gue(30, 0.0);
        let j = Interval::new(0.0, 1.0);
        let joint = joint_count_distribution(&v, 0.0, 1.0).unwrap();
        let hole = counting_law_projection(&v, j).unwrap().hole_probability();
        assert!((joint.iter().sum::<f64>() - hole).abs() < 1e-8);
        assert_eq!(joint_count_probability(&v, 0.0, 31, 1.0).unwrap(), 0.0);
        let unconditional = counting_law_projection(&v, Interval::below(0.0)).unwrap().pmf();
        let at_zero = joint_count_distribution(&v, 0.0, 0.0).unwrap();
        assert_eq!(&at_zero[..unconditional.len()], &unconditional[..]);
        let (mu, s2) = conditional_counting_stats(&v, j, Interval::new(-5.0, 0.0)).unwrap();
        assert!(mu > 0.0 && s2 >= 0.0);
    }
}
