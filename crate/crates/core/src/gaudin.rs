//! The bulk gap probability `E(s) = det(1 - 1_{[0,s]} K_sine 1_{[0,s]})`, the
//! spacing density `p = E''` and its CDF, computed either from Fredholm
//! determinants or from the Painlevé V sigma-form.

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::kernels::KernelFunction;
use crate::operators::fredholm_det_adaptive;
use ode_solvers::{Dopri5, System, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::path::Path;

pub const DEFAULT_S_MAX: f64 = 6.0;
pub const DEFAULT_STEP: f64 = 1e-2;

const FREDHOLM_START_ORDER: usize = 16;
const FREDHOLM_TOL: f64 = 1e-13;
const ODE_RTOL: f64 = 1e-12;
const ODE_ATOL: f64 = 1e-14;
const ODE_X0: f64 = 1e-4;
const MONOTONE_SLACK: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GapRoute {
    Fredholm,
    Painleve,
}

impl fmt::Display for GapRoute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GapRoute::Fredholm => "fredholm",
            GapRoute::Painleve => "painleve",
        })
    }
}

/// `E`, `p` and the CDF on the uniform grid `s_k = k h`, `k = 0..=N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapLawTable {
    pub s: Vec<f64>,
    pub e: Vec<f64>,
    pub p: Vec<f64>,
    pub cdf: Vec<f64>,
    pub route: GapRoute,
    pub step: f64,
    /// `max_k |cdf_k - (1 + E'(s_k))|`, the integrated density against the
    /// first-derivative identity.
    pub cdf_identity_error: f64,
    /// Largest relative residual of the sigma-form along the solution
    /// (Painlevé route only; zero otherwise).
    pub ode_residual: f64,
}

/// The surmise `(pi s / 2) exp(-pi s^2 / 4)`; emitted for comparison only.
pub fn surmise(s: f64) -> f64 {
    0.5 * PI * s * (-PI * s * s / 4.0).exp()
}

fn grid_len(s_max: f64, step: f64) -> Result<usize> {
    if !(s_max > 0.0) || !(step > 0.0) || step > s_max || !s_max.is_finite() {
        return Err(Error::InvalidArgument(format!("need 0 < step <= s_max, got step {step}, s_max {s_max}")));
    }
    let n = (s_max / step).round();
    if ((n * step) - s_max).abs() > 1e-9 * s_max {
        return Err(Error::InvalidArgument(format!("s_max {s_max} is not a multiple of the step {step}")));
    }
    Ok(n as usize)
}

/// Fourth-order cumulative integral of samples on a uniform grid (at least four points).
fn cumulative_integral(h: f64, f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    for k in 0..n - 1 {
        let piece = if k == 0 {
            h / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
        } else if k + 2 >= n {
            h / 24.0 * (9.0 * f[k + 1] + 19.0 * f[k] - 5.0 * f[k - 1] + f[k - 2])
        } else {
            h / 24.0 * (-f[k - 1] + 13.0 * f[k] + 13.0 * f[k + 1] - f[k + 2])
        };
        out[k + 1] = out[k] + piece;
    }
    out
}

impl GapLawTable {
    /// Builds the table from `E` sampled on `k h`, `k = 0..=N+2` (two points past
    /// `s_max` so centered stencils reach the end of the table).
    fn from_gap_function(step: f64, n: usize, e_ext: Vec<f64>, route: GapRoute, ode_residual: f64) -> Result<Self> {
        debug_assert_eq!(e_ext.len(), n + 3);
        let f = &e_ext;
        let h2 = step * step;
        for w in f.windows(2) {
            // determinants carry absolute roundoff near 1e-15
            if !(w[1] <= w[0] + MONOTONE_SLACK) {
                return Err(Error::Quadrature(format!("gap probability not decreasing: {} then {}", w[0], w[1])));
            }
        }
        let mut p = vec![0.0; n + 1];
        let mut de = vec![0.0; n + 1];
        for k in 0..=n {
            // Richardson-combined central differences (five-point stencil),
            // with one-sided sixth-point stencils at the left end
            p[k] = match k {
                0 => (45.0 * f[0] - 154.0 * f[1] + 214.0 * f[2] - 156.0 * f[3] + 61.0 * f[4] - 10.0 * f[5]) / (12.0 * h2),
                1 => (10.0 * f[0] - 15.0 * f[1] - 4.0 * f[2] + 14.0 * f[3] - 6.0 * f[4] + f[5]) / (12.0 * h2),
                _ => (-f[k - 2] + 16.0 * f[k - 1] - 30.0 * f[k] + 16.0 * f[k + 1] - f[k + 2]) / (12.0 * h2),
            };
            de[k] = match k {
                0 => (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * step),
                1 => (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * step),
                _ => (f[k - 2] - 8.0 * f[k - 1] + 8.0 * f[k + 1] - f[k + 2]) / (12.0 * step),
            };
        }
        let cdf = cumulative_integral(step, &p);
        let cdf_identity_error = cdf.iter().zip(&de).map(|(c, d)| (c - (1.0 + d)).abs()).fold(0.0, f64::max);
        let cdf = cdf.into_iter().map(|c| c.clamp(0.0, 1.0)).collect();
        Ok(Self {
            s: (0..=n).map(|k| k as f64 * step).collect(),
            e: e_ext[..=n].to_vec(),
            p,
            cdf,
            route,
            step,
            cdf_identity_error,
            ode_residual,
        })
    }

    pub fn s_max(&self) -> f64 {
        *self.s.last().unwrap()
    }

    /// `int_0^{s_max} p`.
    pub fn total_mass(&self) -> f64 {
        cumulative_integral(self.step, &self.p).last().copied().unwrap_or(0.0)
    }

    /// `int_0^{s_max} z p(z) dz`.
    pub fn mean(&self) -> f64 {
        let zp: Vec<f64> = self.s.iter().zip(&self.p).map(|(s, p)| s * p).collect();
        cumulative_integral(self.step, &zp).last().copied().unwrap_or(0.0)
    }

    /// Writes `s,E,p,cdf,route,surmise`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "s,E,p,cdf,route,surmise")?;
        for k in 0..self.s.len() {
            writeln!(
                out,
                "{},{:e},{:e},{:e},{},{:e}",
                self.s[k], self.e[k], self.p[k], self.cdf[k], self.route, surmise(self.s[k])
            )?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a table written by [`GapLawTable::write_csv`].
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let bad = |what: &str| Error::InvalidArgument(format!("malformed gap table: {what}"));
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("s,E,p,cdf,route,surmise") {
            return Err(bad("header"));
        }
        let (mut s, mut e, mut p, mut cdf) = (vec![], vec![], vec![], vec![]);
        let mut route = None;
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 6 {
                return Err(bad(line));
            }
            let num = |c: &str| c.parse::<f64>().map_err(|_| bad(c));
            s.push(num(cols[0])?);
            e.push(num(cols[1])?);
            p.push(num(cols[2])?);
            cdf.push(num(cols[3])?);
            route = Some(match cols[4] {
                "fredholm" => GapRoute::Fredholm,
                "painleve" => GapRoute::Painleve,
                other => return Err(bad(other)),
            });
        }
        if s.len() < 4 {
            return Err(bad("too few rows"));
        }
        let step = s[1] - s[0];
        Ok(Self { s, e, p, cdf, route: route.unwrap(), step, cdf_identity_error: f64::NAN, ode_residual: f64::NAN })
    }
}

/// `E` on `[0, s_max]` from Nyström determinants of the sine kernel.
pub fn gap_function_fredholm(s_max: f64, step: f64) -> Result<GapLawTable> {
    let n = grid_len(s_max, step)?;
    let kernel = KernelFunction::sine();
    let e = (0..n + 3)
        .into_par_iter()
        .map(|k| {
            let s = k as f64 * step;
            fredholm_det_adaptive(&kernel, Interval::new(0.0, s), FREDHOLM_START_ORDER, FREDHOLM_TOL).map(|r| r.0)
        })
        .collect::<Result<Vec<f64>>>()?;
    GapLawTable::from_gap_function(step, n, e, GapRoute::Fredholm, 0.0)
}

/// State `(sigma, sigma', sigma'', int sigma/x)` as functions of `s = x / pi`.
///
/// The sigma-form `(x s'')^2 + 4 (x s' - s)(x s' - s + s'^2) = 0` is
/// differentiated once, giving an explicit third-order equation; the original
/// relation is kept as a conserved quantity to monitor the branch.
struct SigmaForm;

impl SigmaForm {
    fn third_derivative(x: f64, s0: f64, s1: f64, s2: f64) -> f64 {
        let a = x * s1 - s0;
        -s2 / x - 2.0 / (x * x) * (x * (a + s1 * s1) + a * (x + 2.0 * s1))
    }

    fn invariant(x: f64, y: &Vector4<f64>) -> (f64, f64) {
        let a = x * y[1] - y[0];
        let u = (x * y[2]).powi(2);
        let v = 4.0 * a * (a + y[1] * y[1]);
        (u + v, u + v.abs())
    }
}

impl System<f64, Vector4<f64>> for SigmaForm {
    fn system(&self, s: f64, y: &Vector4<f64>, dy: &mut Vector4<f64>) {
        let x = PI * s;
        dy[0] = PI * y[1];
        dy[1] = PI * y[2];
        dy[2] = PI * Self::third_derivative(x, y[0], y[1], y[2]);
        dy[3] = PI * y[0] / x;
    }
}

/// Initial data at `x0` from the boundary series `sigma = -x/pi - x^2/pi^2 - x^3/pi^3 + ...`,
/// with `sigma''` from the quadratic on the branch continuous with `-2/pi^2`.
fn painleve_start(x0: f64) -> Result<Vector4<f64>> {
    let (p1, p2, p3) = (PI, PI * PI, PI * PI * PI);
    let s0 = -x0 / p1 - x0 * x0 / p2 - x0.powi(3) / p3;
    let s1 = -1.0 / p1 - 2.0 * x0 / p2 - 3.0 * x0 * x0 / p3;
    let a = x0 * s1 - s0;
    let disc = -4.0 * a * (a + s1 * s1);
    if !(disc >= 0.0) {
        return Err(Error::Ode { x: x0, reason: format!("negative discriminant {disc:e} at start") });
    }
    let s2 = -disc.sqrt() / x0;
    let integral = -x0 / p1 - x0 * x0 / (2.0 * p2) - x0.powi(3) / (3.0 * p3);
    Ok(Vector4::new(s0, s1, s2, integral))
}

/// `E(s) = exp(int_0^{pi s} sigma(x)/x dx)` on `[0, s_max]` from the sigma-form.
pub fn gap_function_painleve(s_max: f64, step: f64) -> Result<GapLawTable> {
    let n = grid_len(s_max, step)?;
    let mut y = painleve_start(ODE_X0)?;
    let mut e = Vec::with_capacity(n + 3);
    e.push(1.0);
    let mut residual = 0.0f64;
    let mut from = ODE_X0 / PI;
    for k in 1..n + 3 {
        let to = k as f64 * step;
        let mut solver = Dopri5::new(SigmaForm, from, to, to - from, y, ODE_RTOL, ODE_ATOL);
        solver.set_output(ode_solvers::OutputType::Sparse);
        solver
            .integrate()
            .map_err(|err| Error::Ode { x: PI * from, reason: err.to_string() })?;
        y = *solver.y_out().last().ok_or_else(|| Error::Ode { x: PI * to, reason: "no output".into() })?;
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::Ode { x: PI * to, reason: "non-finite state".into() });
        }
        let (q, scale) = SigmaForm::invariant(PI * to, &y);
        if scale > 0.0 {
            residual = residual.max(q.abs() / scale);
        }
        e.push(y[3].exp());
        from = to;
    }
    GapLawTable::from_gap_function(step, n, e, GapRoute::Painleve, residual)
}

/// `int_0^s p`, by cubic Hermite interpolation of the tabulated CDF.
pub fn gaudin_cdf(s: f64, table: &GapLawTable) -> Result<f64> {
    let s_max = table.s_max();
    if !(s >= 0.0 && s <= s_max * (1.0 + 1e-12)) {
        return Err(Error::InvalidArgument(format!("s = {s} outside the table range [0, {s_max}]")));
    }
    let h = table.step;
    let k = ((s / h).floor() as usize).min(table.s.len() - 2);
    let t = (s - k as f64 * h) / h;
    let (c0, c1) = (table.cdf[k], table.cdf[k + 1]);
    let (d0, d1) = (table.p[k] * h, table.p[k + 1] * h);
    let t2 = t * t;
    let t3 = t2 * t;
    let v = (2.0 * t3 - 3.0 * t2 + 1.0) * c0 + (t3 - 2.0 * t2 + t) * d0 + (-2.0 * t3 + 3.0 * t2) * c1 + (t3 - t2) * d1;
    Ok(v.clamp(0.0, 1.0))
}
