//! Simulation and verification toolkit for the extremal singular values and
//! condition numbers of random circulant matrices.
//!
//! The pipeline is: draw an i.i.d. generating sequence ([`generators`]),
//! take its discrete Fourier transform to get the circulant spectrum
//! ([`circulant`]), reduce it to `(sigma_min, sigma_max, kappa)` and compare
//! replicated samples against the closed-form limit laws ([`laws`],
//! [`stats`]). [`harness`] runs that pipeline in parallel with reproducible
//! per-replication streams and persists the results.

pub mod checks;
pub mod circulant;
pub mod generators;
pub mod harness;
pub mod laws;
pub mod stats;
pub mod streams;

use thiserror::Error;

pub use circulant::{
    extremal_stats, power_stats, reconstruct, spectrum, spectrum_naive, ExtremalStats,
    GeneratingSequence, Spectrum,
};
pub use generators::{DistributionKind, DistributionSpec};
pub use harness::{ExperimentConfig, ExperimentResult, Suite};
pub use laws::{normalizers, NormalizingConstants};
pub use stats::{EmpiricalSample, TestReport};

/// Toolkit version written into persisted files.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LawError {
    #[error("dimension {0} is below the minimum of 3")]
    DimensionTooSmall(usize),
    #[error("power must be at least 1")]
    ZeroPower,
    #[error("argument must be non-negative, got {0}")]
    NegativeArgument(f64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CirculantError {
    #[error("generating sequence has length {0}, need at least 3")]
    TooShort(usize),
    #[error("entry {index} is not finite")]
    NonFinite { index: usize },
    #[error("naive transform refuses length {0} (limit 4096)")]
    NaiveTooLong(usize),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("spectrum is not conjugate symmetric (deviation {0:e})")]
    NotConjugateSymmetric(f64),
    #[error("statistics are already raised to power {0}")]
    AlreadyPowered(u32),
    #[error(transparent)]
    Law(#[from] LawError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeneratorError {
    #[error("delta must be positive and finite, got {0}")]
    InvalidDelta(f64),
    #[error("student-t with df={df} has no finite moment of order 2+{delta} (need df > 2 + delta)")]
    StudentTooHeavy { df: f64, delta: f64 },
    #[error("eta must lie in (0, 1), got {0}")]
    InvalidEta(f64),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Circulant(#[from] CirculantError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("sample is empty")]
    EmptySample,
    #[error("sample contains NaN")]
    NanValue,
    #[error("paired samples differ in length ({left} vs {right})")]
    Unpaired { left: usize, right: usize },
    #[error("Bonferroni depth must be at least 1, got {0}")]
    BonferroniDepth(usize),
    #[error("Bonferroni depth needs {needed} intersection sums, got {got}")]
    MissingOrders { needed: usize, got: usize },
}
