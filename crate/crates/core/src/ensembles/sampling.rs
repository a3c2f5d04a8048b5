use super::tridiagonal::SymTridiagonal;
use crate::error::{Error, Result};
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self_adjoint_evd, self_adjoint_evd_scratch, ComputeEigenvectors};
use faer::diag::Diag;
use faer::{c64, Mat, Par};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleKind {
    Gue,
    /// Three-point entry law matching GUE moments through order four.
    Matched,
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnsembleKind::Gue => "gue",
            EnsembleKind::Matched => "matched",
        })
    }
}

impl FromStr for EnsembleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gue" => Ok(Self::Gue),
            "matched" | "matched_wigner" => Ok(Self::Matched),
            other => Err(Error::InvalidArgument(format!("unknown ensemble '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Full Hermitian matrix and a dense eigensolve.
    Dense,
    /// The tridiagonal model with the same eigenvalue law (GUE only).
    Tridiagonal,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Dense => "dense",
            Backend::Tridiagonal => "tridiagonal",
        })
    }
}

impl FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(Self::Dense),
            "tridiagonal" => Ok(Self::Tridiagonal),
            other => Err(Error::InvalidArgument(format!("unknown backend '{other}'"))),
        }
    }
}

/// Moments of one entry: real and imaginary parts off the diagonal, the real diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntryMoments {
    pub off_second: f64,
    pub off_fourth: f64,
    pub diag_second: f64,
    pub diag_fourth: f64,
    /// Every absolute moment is finite, so any decay condition on the entries holds.
    pub all_moments_finite: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub n: usize,
    pub backend: Backend,
}

impl EnsembleSpec {
    pub fn new(kind: EnsembleKind, n: usize, backend: Backend) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        if kind == EnsembleKind::Matched && backend == Backend::Tridiagonal {
            return Err(Error::InvalidArgument("the tridiagonal model exists only for GUE".into()));
        }
        Ok(Self { kind, n, backend })
    }

    pub fn gue(n: usize) -> Result<Self> {
        Self::new(EnsembleKind::Gue, n, Backend::Tridiagonal)
    }

    pub fn matched(n: usize) -> Result<Self> {
        Self::new(EnsembleKind::Matched, n, Backend::Dense)
    }

    /// Exact moments of the entry laws (both kinds agree through order four).
    pub fn entry_moments(&self) -> EntryMoments {
        match self.kind {
            // N(0, 1/2) parts, N(0, 1) diagonal
            EnsembleKind::Gue => EntryMoments { off_second: 0.5, off_fourth: 0.75, diag_second: 1.0, diag_fourth: 3.0, all_moments_finite: true },
            // {±sqrt(3/2)} w.p. 1/6 each: 2 (1/6)(3/2) and 2 (1/6)(9/4); {±sqrt 3}: 1 and 3
            EnsembleKind::Matched => EntryMoments { off_second: 0.5, off_fourth: 0.75, diag_second: 1.0, diag_fourth: 3.0, all_moments_finite: true },
        }
    }
}

/// Sorted spectrum with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSample {
    pub eigenvalues: Vec<f64>,
    pub seed: u64,
    pub index: u64,
    pub ensemble: EnsembleKind,
}

impl SpectrumSample {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Generator for sample `index` under `seed`: one ChaCha stream per sample, so
/// results do not depend on how samples are spread over threads.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Dumitriu–Edelman model: diagonal N(0, 1), off-diagonals `chi_{2k} / sqrt 2`, `k = n-1..1`.
pub fn gue_tridiagonal(n: usize, rng: &mut impl Rng) -> SymTridiagonal {
    let d: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let e: Vec<f64> = (1..n)
        .map(|i| {
            // chi_{2k}^2 / 2 is Gamma(k, 1)
            let k = (n - i) as f64;
            Gamma::new(k, 1.0).expect("positive shape").sample(rng).sqrt()
        })
        .collect();
    SymTridiagonal::new(d, e).expect("consistent shape")
}

pub fn sample_tridiagonal(n: usize, seed: u64, index: u64) -> SymTridiagonal {
    gue_tridiagonal(n, &mut sample_rng(seed, index))
}

fn three_point(rng: &mut impl Rng, magnitude: f64) -> f64 {
    match rng.random_range(0..6u8) {
        0 => magnitude,
        1 => -magnitude,
        _ => 0.0,
    }
}

fn dense_matrix(kind: EnsembleKind, n: usize, rng: &mut impl Rng) -> Mat<c64> {
    let mut m = Mat::<c64>::zeros(n, n);
    let half = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..n {
        for i in j..n {
            let z = if i == j {
                let x = match kind {
                    EnsembleKind::Gue => StandardNormal.sample(rng),
                    EnsembleKind::Matched => three_point(rng, 3f64.sqrt()),
                };
                c64::new(x, 0.0)
            } else {
                match kind {
                    EnsembleKind::Gue => {
                        let (a, b): (f64, f64) = (StandardNormal.sample(rng), StandardNormal.sample(rng));
                        c64::new(a * half, b * half)
                    }
                    EnsembleKind::Matched => {
                        let r = 1.5f64.sqrt();
                        c64::new(three_point(rng, r), three_point(rng, r))
                    }
                }
            };
            m[(i, j)] = z;
        }
    }
    m
}

/// Eigenvalues (ascending) of the Hermitian matrix stored in the lower triangle, computed serially.
pub fn hermitian_eigenvalues(m: &Mat<c64>) -> Result<Vec<f64>> {
    let n = m.nrows();
    let mut s = Diag::<c64>::zeros(n);
    let par = Par::Seq;
    let mut buf = MemBuffer::new(self_adjoint_evd_scratch::<c64>(n, ComputeEigenvectors::No, par, Default::default()));
    self_adjoint_evd(m.as_ref(), s.as_mut(), None, par, MemStack::new(&mut buf), Default::default())
        .map_err(|e| Error::InvalidArgument(format!("eigensolver failed: {e:?}")))?;
    let mut out: Vec<f64> = s.column_vector().iter().map(|z| z.re).collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Sample `index` of the ensemble under `seed`; bit-for-bit reproducible per backend.
pub fn sample(spec: &EnsembleSpec, seed: u64, index: u64) -> Result<SpectrumSample> {
    let mut rng = sample_rng(seed, index);
    let eigenvalues = match spec.backend {
        Backend::Tridiagonal => gue_tridiagonal(spec.n, &mut rng).eigenvalues(),
        Backend::Dense => hermitian_eigenvalues(&dense_matrix(spec.kind, spec.n, &mut rng))?,
    };
    Ok(SpectrumSample { eigenvalues, seed, index, ensemble: spec.kind })
}

pub fn sample_gue(n: usize, seed: u64, backend: Backend) -> Result<SpectrumSample> {
    sample(&EnsembleSpec::new(EnsembleKind::Gue, n, backend)?, seed, 0)
}

pub fn sample_matched_wigner(n: usize, seed: u64) -> Result<SpectrumSample> {
    sample(&EnsembleSpec::matched(n)?, seed, 0)
}

/// One row per sample: `seed,index,n,ensemble,lambda_1..lambda_n`.
pub fn write_spectra_csv(path: impl AsRef<Path>, samples: &[SpectrumSample]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let n = samples.first().map_or(0, SpectrumSample::n);
    write!(out, "seed,index,n,ensemble")?;
    for k in 1..=n {
        write!(out, ",lambda_{k}")?;
    }
    writeln!(out)?;
    for s in samples {
        write!(out, "{},{},{},{}", s.seed, s.index, s.n(), s.ensemble)?;
        for l in &s.eigenvalues {
            write!(out, ",{l:e}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_point_moments_are_exact() {
        // enumerate the law rather than sample it
        let r: f64 = 1.5f64.sqrt();
        let support = [(r, 1.0 / 6.0), (-r, 1.0 / 6.0), (0.0, 2.0 / 3.0)];
        let moment = |k: i32| support.iter().map(|(x, p)| p * x.powi(k)).sum::<f64>();
        assert!((moment(1)).abs() < 1e-15 && moment(3).abs() < 1e-15);
        assert!((moment(2) - 0.5).abs() < 1e-15);
        assert!((moment(4) - 0.75).abs() < 1e-15);
        let m = EnsembleSpec::matched(3).unwrap().entry_moments();
        assert_eq!(m, EnsembleSpec::gue(3).unwrap().entry_moments());
    }

    #[test]
    fn reproducible_and_sorted() {
        for backend in [Backend::Dense, Backend::Tridiagonal] {
            let a = sample_gue(30, 9, backend).unwrap();
            let b = sample_gue(30, 9, backend).unwrap();
            assert_eq!(a, b);
            assert!(a.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            assert_ne!(a, sample_gue(30, 10, backend).unwrap());
        }
        let m = sample_matched_wigner(25, 4).unwrap();
        assert_eq!(m, sample_matched_wigner(25, 4).unwrap());
        assert_eq!(m.n(), 25);
    }

    #[test]
    fn trace_matches_matrix_trace() {
        let mut rng = sample_rng(1, 2);
        let m = dense_matrix(EnsembleKind::Gue, 12, &mut rng);
        let tr: f64 = (0..12).map(|i| m[(i, i)].re).sum();
        let ev = hermitian_eigenvalues(&m).unwrap();
        assert!((ev.iter().sum::<f64>() - tr).abs() < 1e-12);
    }

    #[test]
    fn one_by_one_is_standard_normal() {
        let xs: Vec<f64> = (0..20000).map(|k| sample(&EnsembleSpec::gue(1).unwrap(), 77, k).unwrap().eigenvalues[0]).collect();
        let (mean, var) = crate::stats::mean_var(&xs);
        assert!(mean.abs() < 0.03 && (var - 1.0).abs() < 0.03);
    }

    #[test]
    fn matched_requires_dense() {
        assert!(EnsembleSpec::new(EnsembleKind::Matched, 4, Backend::Tridiagonal).is_err());
        assert!("matched".parse::<EnsembleKind>().is_ok());
        assert!("goe".parse::<EnsembleKind>().is_err());
    }

    #[test]
    fn csv_has_one_row_per_sample() {
        let s: Vec<_> = (0..3).map(|k| sample(&EnsembleSpec::gue(4).unwrap(), 1, k).unwrap()).collect();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_spectra_csv(&p, &s).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("seed,index,n,ensemble,lambda_1"));
    }
}
