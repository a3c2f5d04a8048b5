//! Random Hermitian matrices and their spectra: GUE (dense or through its
//! tridiagonal model), a Wigner ensemble whose entries match GUE moments to
//! fourth order, bulk rescaling, and gap statistics.

mod gaps;
mod sampling;
mod tridiagonal;

pub use gaps::{averaged_gap_stat, averaged_gap_stat_local, rescale, single_gap, RescaledContext};
pub use sampling::{
    gue_tridiagonal, hermitian_eigenvalues, sample, sample_gue, sample_matched_wigner, sample_rng,
    sample_tridiagonal, write_spectra_csv, Backend, EnsembleKind, EnsembleSpec, EntryMoments,
    SpectrumSample,
};
pub use tridiagonal::SymTridiagonal;
