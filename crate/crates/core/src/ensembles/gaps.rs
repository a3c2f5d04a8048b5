use crate::error::{Error, Result};
use crate::kernels::{classical_location, semicircle_density};
use serde::{Deserialize, Serialize};

/// Coordinates `x = (lambda - u sqrt n) sqrt n rho(u)` in which the local mean spacing is one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescaledContext {
    pub u: f64,
    pub n: usize,
    /// `sqrt(n) rho_sc(u)`.
    pub scale: f64,
    /// `u sqrt(n)`.
    pub shift: f64,
}

impl RescaledContext {
    pub fn new(n: usize, u: f64) -> Result<Self> {
        if !(u.abs() < 2.0) || n == 0 {
            return Err(Error::InvalidArgument(format!("need |u| < 2 and n >= 1, got u = {u}, n = {n}")));
        }
        let sn = (n as f64).sqrt();
        Ok(Self { u, n, scale: sn * semicircle_density(u), shift: u * sn })
    }

    pub fn to_rescaled(&self, lambda: f64) -> f64 {
        (lambda - self.shift) * self.scale
    }

    pub fn to_original(&self, x: f64) -> f64 {
        self.shift + x / self.scale
    }
}

pub fn rescale(eigenvalues: &[f64], u: f64) -> Result<(Vec<f64>, RescaledContext)> {
    let ctx = RescaledContext::new(eigenvalues.len(), u)?;
    Ok((eigenvalues.iter().map(|&l| ctx.to_rescaled(l)).collect(), ctx))
}

/// `(lambda_{i+1} - lambda_i) sqrt(n) rho_sc(u)` for 1-based `i`; `u` defaults to
/// the classical location of `lambda_i`.
pub fn single_gap(eigenvalues: &[f64], i: usize, u: Option<f64>) -> Result<f64> {
    let n = eigenvalues.len();
    if n < 2 || i == 0 || i >= n {
        return Err(Error::IndexOutOfRange { index: i, lo: 1, hi: n.saturating_sub(1) });
    }
    let u = match u {
        Some(u) => u,
        None => classical_location(i, n)?,
    };
    let ctx = RescaledContext::new(n, u)?;
    Ok((eigenvalues[i] - eigenvalues[i - 1]) * ctx.scale)
}

/// Fraction of gaps at most `s` (in local units) among eigenvalues within `t_n`
/// local units of `u sqrt n`, normalized by `2 t_n`.
pub fn averaged_gap_stat(eigenvalues: &[f64], s: f64, t_n: f64, u: f64) -> Result<f64> {
    averaged_gap_stat_local(eigenvalues, eigenvalues.len(), s, t_n, u)
}

/// As [`averaged_gap_stat`], for a consecutive run of the spectrum of an
/// `n x n` matrix that covers the window plus one neighbour on each side.
pub fn averaged_gap_stat_local(eigenvalues: &[f64], n: usize, s: f64, t_n: f64, u: f64) -> Result<f64> {
    if !(s >= 0.0) || !(t_n > 1.0 && t_n < n as f64) {
        return Err(Error::InvalidArgument(format!("need s >= 0 and 1 < t_n < n, got s = {s}, t_n = {t_n}")));
    }
    let ctx = RescaledContext::new(n, u)?;
    let count = eigenvalues
        .windows(2)
        .filter(|w| (w[1] - w[0]) * ctx.scale <= s && ctx.to_rescaled(w[0]).abs() <= t_n)
        .count();
    Ok(count as f64 / (2.0 * t_n))
}
