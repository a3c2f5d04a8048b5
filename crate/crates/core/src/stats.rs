//! Goodness-of-fit distances between samples and distributions.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// Distance together with its asymptotic p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u32 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn sorted(data: &[f64]) -> Vec<f64> {
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn ks_p_value(d: f64, effective_n: f64) -> f64 {
    let sq = effective_n.sqrt();
    kolmogorov_survival((sq + 0.12 + 0.11 / sq) * d)
}

/// One-sample Kolmogorov–Smirnov distance `sup |F_n - F|`.
pub fn ks_one_sample(data: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let x = sorted(data);
    let n = x.len();
    if n == 0 {
        return KsResult { statistic: 0.0, p_value: 1.0, n };
    }
    let nf = n as f64;
    let mut d = 0.0f64;
    for (i, &xi) in x.iter().enumerate() {
        let f = cdf(xi);
        d = d.max((i + 1) as f64 / nf - f).max(f - i as f64 / nf);
    }
    KsResult { statistic: d, p_value: ks_p_value(d, nf), n }
}

/// Two-sample Kolmogorov–Smirnov distance between empirical CDFs.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let (x, y) = (sorted(a), sorted(b));
    let (n, m) = (x.len(), y.len());
    if n == 0 || m == 0 {
        return KsResult { statistic: 0.0, p_value: 1.0, n: n.min(m) };
    }
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < n && j < m {
        let t = x[i].min(y[j]);
        while i < n && x[i] <= t {
            i += 1;
        }
        while j < m && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    KsResult { statistic: d, p_value: ks_p_value(d, ne), n: n.min(m) }
}

/// Cramér–von Mises statistic `1/(12n) + sum ((2i-1)/(2n) - F(x_i))^2`.
pub fn cramer_von_mises(data: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let x = sorted(data);
    let n = x.len() as f64;
    if x.is_empty() {
        return 0.0;
    }
    1.0 / (12.0 * n)
        + x.iter()
            .enumerate()
            .map(|(i, &xi)| ((2 * i + 1) as f64 / (2.0 * n) - cdf(xi)).powi(2))
            .sum::<f64>()
}

pub fn standard_normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// Mean and unbiased variance.
pub fn mean_var(data: &[f64]) -> (f64, f64) {
    let n = data.len() as f64;
    if data.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = data.iter().sum::<f64>() / n;
    let var = if data.len() > 1 { data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var)
}
