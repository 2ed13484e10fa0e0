//! Replicated simulation across dimensions, verification against the limit
//! laws, and persistence.
//!
//! Replication `r` at dimension `n` always draws from the stream keyed by
//! `(master_seed, n, r, role)`, and results are collected in
//! `(dimension, replication)` order, so a run is a pure function of its
//! configuration whatever the worker count.

mod persist;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::circulant::{
    extremal_stats, extremal_stats_from_moduli, power_stats, spectrum, CirculantTransform,
    ExtremalStats,
};
use crate::generators::{
    sample_sequence, smooth, truncate, truncation_level, DistributionKind, DistributionSpec,
    SmoothingParams, DEFAULT_ETA,
};
use crate::laws::{
    gaussian_exact_joint_cdf, gumbel_quantile, normalizers, power_law_cdfs, rayleigh_quantile,
    MIN_DIMENSION,
};
use crate::stats::{
    joint_discrepancy, joint_ecdf, ks_statistic, quantile_grid, EmpiricalSample, GridPoint,
    SampleProvenance, TestReport,
};
use crate::streams::{derive_stream, StreamRole};
use crate::{CirculantError, GeneratorError, LawError, StatsError};

pub use persist::{load, persist, LoadError, PersistFormat, FORMAT_HEADER};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("replication {replication} at n={n}: {source}")]
    Replication {
        n: usize,
        replication: usize,
        #[source]
        source: GeneratorError,
    },
    #[error("suite {suite} cannot run on this result: {reason}")]
    SuiteMismatch { suite: Suite, reason: String },
    #[error("could not build worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Law(#[from] LawError),
    #[error(transparent)]
    Circulant(#[from] CirculantError),
}

/// Everything that determines a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dimensions: Vec<usize>,
    pub distribution: DistributionSpec,
    pub replications: usize,
    pub master_seed: u64,
    pub include_zero_index: bool,
    pub power_p: u32,
    pub apply_truncation: bool,
    pub apply_smoothing: bool,
    pub eta: f64,
    /// Worker threads; `None` uses all available cores. Never affects output.
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(
        dimensions: Vec<usize>,
        distribution: DistributionSpec,
        replications: usize,
        master_seed: u64,
    ) -> Self {
        Self {
            dimensions,
            distribution,
            replications,
            master_seed,
            include_zero_index: true,
            power_p: 1,
            apply_truncation: false,
            apply_smoothing: false,
            eta: DEFAULT_ETA,
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let invalid = |field, reason: String| Err(HarnessError::InvalidConfig { field, reason });
        if self.dimensions.is_empty() {
            return invalid("dimensions", "at least one dimension is required".into());
        }
        if let Some(&n) = self.dimensions.iter().find(|&&n| n < MIN_DIMENSION) {
            return invalid("dimensions", format!("{n} is below the minimum of 3"));
        }
        let mut seen = self.dimensions.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.dimensions.len() {
            return invalid("dimensions", "dimensions must be distinct".into());
        }
        if self.replications == 0 {
            return invalid("replications", "must be at least 1".into());
        }
        if self.power_p == 0 {
            return invalid("power", "must be at least 1".into());
        }
        if self.workers == Some(0) {
            return invalid("workers", "must be at least 1".into());
        }
        if let Err(e) = DistributionSpec::new(self.distribution.kind, self.distribution.delta) {
            return invalid("distribution", e.to_string());
        }
        if self.apply_smoothing && !(self.eta > 0.0 && self.eta < 1.0) {
            return invalid("eta", format!("must lie in (0, 1), got {}", self.eta));
        }
        Ok(())
    }

    /// Condensed description used in sample provenance.
    fn flags(&self) -> Vec<String> {
        let mut flags = Vec::new();
        if !self.include_zero_index {
            flags.push("no-zero-index".into());
        }
        if self.power_p != 1 {
            flags.push(format!("power={}", self.power_p));
        }
        if self.apply_truncation {
            flags.push("truncate".into());
        }
        if self.apply_smoothing {
            flags.push(format!("smooth(eta={})", self.eta));
        }
        flags
    }
}

/// Statistics of one realization, as stored and persisted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub kappa: Option<f64>,
    pub norm_max: f64,
    pub norm_kappa: Option<f64>,
}

impl From<(usize, &ExtremalStats)> for ReplicationRecord {
    fn from((replication, s): (usize, &ExtremalStats)) -> Self {
        Self {
            replication,
            sigma_min: s.sigma_min,
            sigma_max: s.sigma_max,
            kappa: s.kappa,
            norm_max: s.norm_max,
            norm_kappa: s.norm_kappa,
        }
    }
}

/// Location and spread of one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSummary {
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
    pub q10: f64,
    pub q50: f64,
    pub q90: f64,
}

impl SampleSummary {
    fn of(sample: &EmpiricalSample) -> Self {
        Self {
            count: sample.len(),
            mean: sample.mean().unwrap_or(f64::NAN),
            sd: sample.variance().map_or(f64::NAN, f64::sqrt),
            q10: sample.quantile(0.1).unwrap_or(f64::NAN),
            q50: sample.quantile(0.5).unwrap_or(f64::NAN),
            q90: sample.quantile(0.9).unwrap_or(f64::NAN),
        }
    }
}

/// All replications at one dimension, in replication order.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionResult {
    pub n: usize,
    pub records: Vec<ReplicationRecord>,
}

impl DimensionResult {
    pub fn undefined_count(&self) -> usize {
        self.records.iter().filter(|r| r.kappa.is_none()).count()
    }

    /// `sigma_min` per replication (replication order).
    pub fn min_values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.sigma_min).collect()
    }

    /// Normalized `sigma_max` per replication (replication order).
    pub fn norm_max_values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.norm_max).collect()
    }

    fn sample(&self, values: Vec<f64>, undefined: usize, config: &ExperimentConfig) -> EmpiricalSample {
        let provenance = SampleProvenance {
            distribution: config.distribution.name().to_string(),
            delta: config.distribution.delta,
            seed: config.master_seed,
            flags: config.flags(),
        };
        EmpiricalSample::new(values, undefined, self.n, provenance)
            .expect("simulated statistics are never NaN")
    }

    pub fn min_sample(&self, config: &ExperimentConfig) -> EmpiricalSample {
        self.sample(self.min_values(), 0, config)
    }

    pub fn max_sample(&self, config: &ExperimentConfig) -> EmpiricalSample {
        self.sample(self.norm_max_values(), 0, config)
    }

    /// Normalized condition numbers; undefined ones are only tallied.
    pub fn kappa_sample(&self, config: &ExperimentConfig) -> EmpiricalSample {
        let values = self.records.iter().filter_map(|r| r.norm_kappa).collect();
        self.sample(values, self.undefined_count(), config)
    }

    pub fn summaries(&self, config: &ExperimentConfig) -> [SampleSummary; 3] {
        [
            SampleSummary::of(&self.min_sample(config)),
            SampleSummary::of(&self.max_sample(config)),
            SampleSummary::of(&self.kappa_sample(config)),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub dimensions: Vec<DimensionResult>,
    pub wall_time: Duration,
}

impl PartialEq for ExperimentResult {
    /// Structural equality: wall time and worker count are not part of a result.
    fn eq(&self, other: &Self) -> bool {
        let strip = |c: &ExperimentConfig| ExperimentConfig {
            workers: None,
            ..c.clone()
        };
        strip(&self.config) == strip(&other.config) && self.dimensions == other.dimensions
    }
}

impl ExperimentResult {
    pub fn dimension(&self, n: usize) -> Option<&DimensionResult> {
        self.dimensions.iter().find(|d| d.n == n)
    }
}

/// Per-dimension state shared by all replications.
struct DimensionPlan {
    n: usize,
    transform: CirculantTransform,
    consts: crate::NormalizingConstants,
    truncation: Option<(f64, f64)>,
    smoothing: Option<SmoothingParams>,
}

impl DimensionPlan {
    fn new(n: usize, config: &ExperimentConfig) -> Result<Self, HarnessError> {
        let spec = &config.distribution;
        let truncation = config.apply_truncation.then(|| {
            let level = truncation_level(n, spec.delta);
            (level, spec.truncated_mean(level))
        });
        let smoothing = if config.apply_smoothing {
            Some(SmoothingParams::new(spec, n, config.eta).map_err(|e| {
                HarnessError::InvalidConfig {
                    field: "eta",
                    reason: e.to_string(),
                }
            })?)
        } else {
            None
        };
        Ok(Self {
            n,
            transform: CirculantTransform::new(n)?,
            consts: normalizers(n, 1)?,
            truncation,
            smoothing,
        })
    }
}

#[derive(Default)]
struct Scratch {
    entries: Vec<f64>,
    buf: Vec<Complex64>,
    fft_scratch: Vec<Complex64>,
    moduli: Vec<f64>,
}

fn simulate_one(
    plan: &DimensionPlan,
    config: &ExperimentConfig,
    r: usize,
    scratch: &mut Scratch,
) -> Result<ExtremalStats, GeneratorError> {
    let n = plan.n;
    let mut rng = derive_stream(config.master_seed, n as u64, r as u64, StreamRole::Entries);
    scratch.entries.resize(n, 0.0);
    config.distribution.fill(&mut rng, &mut scratch.entries);
    if let Some((level, shift)) = plan.truncation {
        for x in scratch.entries.iter_mut() {
            *x = if x.abs() <= level { *x - shift } else { -shift };
        }
    }
    if let Some(params) = &plan.smoothing {
        let mut noise = derive_stream(config.master_seed, n as u64, r as u64, StreamRole::Smoothing);
        for x in scratch.entries.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut noise);
            *x += params.s_n * z;
        }
    }
    if let Some(index) = scratch.entries.iter().position(|v| !v.is_finite()) {
        return Err(CirculantError::NonFinite { index }.into());
    }
    let Scratch {
        entries,
        buf,
        fft_scratch,
        moduli,
    } = scratch;
    plan.transform.moduli_into(entries, buf, fft_scratch, moduli)?;
    let stats = extremal_stats_from_moduli(moduli, &plan.consts, config.include_zero_index)?;
    if config.power_p == 1 {
        Ok(stats)
    } else {
        Ok(power_stats(&stats, config.power_p)?)
    }
}

/// Run every replication at every dimension.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
    config.validate()?;
    let start = Instant::now();
    let plans = config
        .dimensions
        .iter()
        .map(|&n| DimensionPlan::new(n, config))
        .collect::<Result<Vec<_>, _>>()?;
    let reps = config.replications;
    let total = plans.len() * reps;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = config.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;

    let stats: Vec<ExtremalStats> = pool.install(|| {
        (0..total)
            .into_par_iter()
            .map_init(Scratch::default, |scratch, idx| {
                let (d, r) = (idx / reps, idx % reps);
                simulate_one(&plans[d], config, r, scratch).map_err(|source| {
                    HarnessError::Replication {
                        n: plans[d].n,
                        replication: r,
                        source,
                    }
                })
            })
            .collect::<Result<Vec<_>, _>>()
    })?;

    let dimensions = plans
        .iter()
        .zip(stats.chunks(reps))
        .map(|(plan, chunk)| DimensionResult {
            n: plan.n,
            records: chunk.iter().enumerate().map(ReplicationRecord::from).collect(),
        })
        .collect();
    Ok(ExperimentResult {
        config: config.clone(),
        dimensions,
        wall_time: start.elapsed(),
    })
}

/// Recompute one replication step by step through the public operations.
///
/// Used to audit that stored records belong to the realization their
/// stream key describes.
pub fn replay_replication(
    config: &ExperimentConfig,
    n: usize,
    replication: usize,
) -> Result<ExtremalStats, HarnessError> {
    let wrap = |source: GeneratorError| HarnessError::Replication {
        n,
        replication,
        source,
    };
    let spec = &config.distribution;
    let mut rng = derive_stream(config.master_seed, n as u64, replication as u64, StreamRole::Entries);
    let mut seq = sample_sequence(spec, n, &mut rng).map_err(wrap)?;
    if config.apply_truncation {
        seq = truncate(&seq, spec);
    }
    if config.apply_smoothing {
        let params = SmoothingParams::new(spec, n, config.eta).map_err(wrap)?;
        let mut noise =
            derive_stream(config.master_seed, n as u64, replication as u64, StreamRole::Smoothing);
        seq = smooth(&seq, &params, &mut noise).map_err(wrap)?;
    }
    let consts = normalizers(n, 1)?;
    let stats = extremal_stats(&spectrum(&seq)?, &consts, config.include_zero_index)?;
    Ok(if config.power_p == 1 {
        stats
    } else {
        power_stats(&stats, config.power_p)?
    })
}

/// Verification suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Suite {
    MarginalMin,
    MarginalMax,
    Kappa,
    Joint,
    Independence,
    GaussianExact,
    Power,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::MarginalMin,
        Suite::MarginalMax,
        Suite::Kappa,
        Suite::Joint,
        Suite::Independence,
        Suite::GaussianExact,
        Suite::Power,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::MarginalMin => "marginal_min",
            Suite::MarginalMax => "marginal_max",
            Suite::Kappa => "kappa",
            Suite::Joint => "joint",
            Suite::Independence => "independence",
            Suite::GaussianExact => "gaussian_exact",
            Suite::Power => "power",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| format!("unknown suite `{s}`"))
    }
}

/// Default pass thresholds, one per suite.
///
/// Marginal and joint budgets cover sampling noise at `2e4` replications
/// plus the finite-`n` bias at `n = 4096`. `gaussian_exact` is a ratio:
/// every grid gap divided by its own tolerance `3 sqrt(F(1-F)/N) + 0.002`
/// must stay below it.
pub fn default_threshold(suite: Suite) -> f64 {
    match suite {
        Suite::MarginalMin | Suite::MarginalMax => 0.03,
        Suite::Kappa | Suite::Joint => 0.05,
        Suite::Independence => 0.02,
        Suite::GaussianExact => 1.0,
        Suite::Power => POWER_THRESHOLDS[0],
    }
}

/// Power-suite thresholds for (max, min, kappa).
pub const POWER_THRESHOLDS: [f64; 3] = [0.04, 0.04, 0.06];

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    /// Overrides of [`default_threshold`]. For [`Suite::Power`] the override
    /// applies to all three power statistics.
    pub thresholds: BTreeMap<Suite, f64>,
    /// Side of the quantile grid used by the bivariate suites.
    pub grid_size: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            thresholds: BTreeMap::new(),
            grid_size: 5,
        }
    }
}

impl VerifyOptions {
    fn threshold(&self, suite: Suite) -> f64 {
        self.thresholds
            .get(&suite)
            .copied()
            .unwrap_or_else(|| default_threshold(suite))
    }
}

fn require(suite: Suite, ok: bool, reason: &str) -> Result<(), HarnessError> {
    if ok {
        Ok(())
    } else {
        Err(HarnessError::SuiteMismatch {
            suite,
            reason: reason.to_string(),
        })
    }
}

/// Check a suite's preconditions on a configuration without running it.
pub fn check_suite(config: &ExperimentConfig, suite: Suite) -> Result<(), HarnessError> {
    match suite {
        Suite::Power => Ok(()),
        Suite::GaussianExact => {
            require(
                suite,
                config.distribution.kind == DistributionKind::StandardGaussian,
                "needs standard Gaussian entries",
            )?;
            require(
                suite,
                !config.apply_truncation && !config.apply_smoothing,
                "needs untransformed entries",
            )?;
            require(suite, config.include_zero_index, "needs the zero index")?;
            require(suite, config.power_p == 1, "needs power 1")
        }
        _ => require(
            suite,
            config.power_p == 1,
            "statistics are powered; use the power suite",
        ),
    }
}

/// Run one suite on every dimension of a result.
pub fn verify(
    result: &ExperimentResult,
    suite: Suite,
    options: &VerifyOptions,
) -> Result<Vec<TestReport>, HarnessError> {
    let config = &result.config;
    check_suite(config, suite)?;
    if options.grid_size == 0 {
        return Err(HarnessError::InvalidConfig {
            field: "grid",
            reason: "grid size must be at least 1".into(),
        });
    }
    let threshold = options.threshold(suite);
    let mut reports = Vec::new();
    for dim in &result.dimensions {
        let label = |name: &str| format!("{name}[n={}]", dim.n);
        let laws = power_law_cdfs(config.power_p)?;
        match suite {
            Suite::MarginalMin => {
                let s = dim.min_sample(config);
                let d = ks_statistic(&s, |x| laws.min_cdf(x));
                reports.push(TestReport::new(label(suite.name()), d, s.len(), threshold));
            }
            Suite::MarginalMax => {
                let s = dim.max_sample(config);
                let d = ks_statistic(&s, |y| laws.max_cdf(y));
                reports.push(TestReport::new(label(suite.name()), d, s.len(), threshold));
            }
            Suite::Kappa => {
                let s = dim.kappa_sample(config);
                let d = if s.is_empty() { 1.0 } else { ks_statistic(&s, |z| laws.kappa_cdf(z)) };
                reports.push(TestReport::new(label(suite.name()), d, s.len(), threshold));
            }
            Suite::Joint | Suite::Independence => {
                let grid = quantile_grid(options.grid_size, rayleigh_quantile, gumbel_quantile);
                let jd = joint_discrepancy(
                    &dim.min_values(),
                    &dim.norm_max_values(),
                    &grid,
                    |x, y| laws.joint_cdf(x, y),
                    threshold,
                    threshold,
                )?;
                let mut report = if suite == Suite::Joint { jd.joint } else { jd.independence };
                report.statistic_name = label(suite.name());
                reports.push(report);
            }
            Suite::GaussianExact => {
                reports.push(gaussian_exact_report(dim, options.grid_size, threshold, &label)?);
            }
            Suite::Power => {
                let names = ["power_max", "power_min", "power_kappa"];
                let samples = [
                    dim.max_sample(config),
                    dim.min_sample(config),
                    dim.kappa_sample(config),
                ];
                for (k, (name, s)) in names.iter().zip(&samples).enumerate() {
                    let d = match k {
                        0 => ks_statistic(s, |y| laws.max_cdf(y)),
                        1 => ks_statistic(s, |x| laws.min_cdf(x)),
                        _ if s.is_empty() => 1.0,
                        _ => ks_statistic(s, |z| laws.kappa_cdf(z)),
                    };
                    let t = options
                        .thresholds
                        .get(&Suite::Power)
                        .copied()
                        .unwrap_or(POWER_THRESHOLDS[k]);
                    reports.push(TestReport::new(label(name), d, s.len(), t));
                }
            }
        }
    }
    Ok(reports)
}

/// Pointwise tolerance of the exact-law comparison at `N` replications.
pub fn gaussian_exact_tolerance(f: f64, sample_size: usize) -> f64 {
    3.0 * (f * (1.0 - f) / sample_size as f64).sqrt() + 0.002
}

fn gaussian_exact_report(
    dim: &DimensionResult,
    grid_size: usize,
    threshold: f64,
    label: &dyn Fn(&str) -> String,
) -> Result<TestReport, HarnessError> {
    let mins = dim.min_values();
    let maxs = dim.norm_max_values();
    let n_samples = mins.len();
    let mut worst: f64 = 0.0;
    let mut points = Vec::new();
    for (x, y) in quantile_grid(grid_size, rayleigh_quantile, gumbel_quantile) {
        let theory = gaussian_exact_joint_cdf(dim.n, x, y)?;
        let empirical = joint_ecdf(&mins, &maxs, x, y);
        let gap = (empirical - theory).abs();
        let tol = gaussian_exact_tolerance(theory, n_samples);
        worst = worst.max(gap / tol);
        points.push(GridPoint {
            x,
            y,
            empirical,
            theoretical: theory,
            gap,
            tolerance: Some(tol),
        });
    }
    Ok(TestReport::new(label(Suite::GaussianExact.name()), worst, n_samples, threshold).with_grid(points))
}
