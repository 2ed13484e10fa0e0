//! Samplers for i.i.d. zero-mean, unit-variance generating sequences, plus
//! the truncation and Gaussian-smoothing transforms of a sequence.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal, StudentT};
use libm::erf;
use statrs::function::gamma::ln_gamma;

use crate::circulant::{GeneratingSequence, Provenance};
use crate::GeneratorError;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Default Student-t degrees of freedom.
pub const DEFAULT_STUDENT_DF: f64 = 5.0;
/// Default Lyapunov exponent for the Student-t kind.
pub const DEFAULT_STUDENT_DELTA: f64 = 0.5;
/// Default Lyapunov exponent for the light-tailed kinds.
pub const DEFAULT_DELTA: f64 = 1.0;
/// Default smoothing exponent slack.
pub const DEFAULT_ETA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionKind {
    StandardGaussian,
    /// Uniform on `{-1, +1}`.
    Rademacher,
    /// Uniform on `[-sqrt(3), sqrt(3)]`.
    UniformStandardized,
    /// `Exp(1) - 1`.
    ExponentialCentered,
    /// Student-t scaled by `sqrt((df - 2) / df)`.
    StudentTStandardized { df: f64 },
}

impl DistributionKind {
    pub fn name(&self) -> &'static str {
        match self {
            DistributionKind::StandardGaussian => "gaussian",
            DistributionKind::Rademacher => "rademacher",
            DistributionKind::UniformStandardized => "uniform",
            DistributionKind::ExponentialCentered => "exp-centered",
            DistributionKind::StudentTStandardized { .. } => "student-t",
        }
    }

    pub fn is_symmetric(&self) -> bool {
        !matches!(self, DistributionKind::ExponentialCentered)
    }

    /// Whether the law has atoms (so exact spectral zeros have positive probability).
    pub fn is_discrete(&self) -> bool {
        matches!(self, DistributionKind::Rademacher)
    }

    pub fn default_delta(&self) -> f64 {
        match self {
            DistributionKind::StudentTStandardized { .. } => DEFAULT_STUDENT_DELTA,
            _ => DEFAULT_DELTA,
        }
    }
}

/// An i.i.d. entry law with its Lyapunov exponent `delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionSpec {
    pub kind: DistributionKind,
    pub delta: f64,
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            DistributionKind::StudentTStandardized { df } => {
                write!(f, "{}(df={df}, delta={})", self.kind.name(), self.delta)
            }
            _ => write!(f, "{}(delta={})", self.kind.name(), self.delta),
        }
    }
}

impl DistributionSpec {
    pub fn new(kind: DistributionKind, delta: f64) -> Result<Self, GeneratorError> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(GeneratorError::InvalidDelta(delta));
        }
        if let DistributionKind::StudentTStandardized { df } = kind {
            if df.is_nan() || df <= 2.0 + delta {
                return Err(GeneratorError::StudentTooHeavy { df, delta });
            }
        }
        Ok(Self { kind, delta })
    }

    /// Kind with its default `delta`.
    pub fn with_default_delta(kind: DistributionKind) -> Self {
        Self::new(kind, kind.default_delta()).expect("default delta is admissible")
    }

    pub fn gaussian() -> Self {
        Self::with_default_delta(DistributionKind::StandardGaussian)
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn declared_mean(&self) -> f64 {
        0.0
    }

    pub fn declared_variance(&self) -> f64 {
        1.0
    }

    /// `s = 2 + delta`.
    pub fn lyapunov_order(&self) -> f64 {
        2.0 + self.delta
    }

    /// `E|xi|^(2 + delta)`.
    pub fn moment_2_plus_delta(&self) -> f64 {
        let s = self.lyapunov_order();
        match self.kind {
            DistributionKind::StandardGaussian => {
                (0.5 * s * 2f64.ln() + ln_gamma(0.5 * (s + 1.0))).exp() / PI.sqrt()
            }
            DistributionKind::Rademacher => 1.0,
            DistributionKind::UniformStandardized => SQRT_3.powf(s) / (s + 1.0),
            DistributionKind::ExponentialCentered => {
                let tail = ln_gamma(s + 1.0).exp();
                let body = adaptive_simpson(&|u: f64| u.powf(s) * u.exp(), 0.0, 1.0, 1e-13);
                (tail + body) / std::f64::consts::E
            }
            DistributionKind::StudentTStandardized { df } => {
                // E|T|^s = df^(s/2) G((s+1)/2) G((df-s)/2) / (sqrt(pi) G(df/2))
                let log_t = 0.5 * s * df.ln() + ln_gamma(0.5 * (s + 1.0))
                    + ln_gamma(0.5 * (df - s))
                    - 0.5 * PI.ln()
                    - ln_gamma(0.5 * df);
                (log_t + 0.5 * s * ((df - 2.0) / df).ln()).exp()
            }
        }
    }

    /// `E[xi 1{|xi| <= level}]`.
    pub fn truncated_mean(&self, level: f64) -> f64 {
        match self.kind {
            DistributionKind::ExponentialCentered => {
                let lo = (1.0 - level).max(0.0);
                let hi = 1.0 + level;
                lo * (-lo).exp() - hi * (-hi).exp()
            }
            _ => 0.0,
        }
    }

    /// `E[xi^2 1{|xi| <= level}]`.
    pub fn truncated_second_moment(&self, level: f64) -> f64 {
        if level <= 0.0 {
            return 0.0;
        }
        match self.kind {
            DistributionKind::StandardGaussian => {
                let density = (-0.5 * level * level).exp() / (2.0 * PI).sqrt();
                erf(level / SQRT_2) - 2.0 * level * density
            }
            DistributionKind::Rademacher => {
                if level >= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            DistributionKind::UniformStandardized => {
                if level >= SQRT_3 {
                    1.0
                } else {
                    level.powi(3) / (3.0 * SQRT_3)
                }
            }
            DistributionKind::ExponentialCentered => {
                let lo = (1.0 - level).max(0.0);
                let hi = 1.0 + level;
                (lo * lo + 1.0) * (-lo).exp() - (hi * hi + 1.0) * (-hi).exp()
            }
            DistributionKind::StudentTStandardized { df } => {
                let k = ((df - 2.0) / df).sqrt();
                let log_c = ln_gamma(0.5 * (df + 1.0))
                    - ln_gamma(0.5 * df)
                    - 0.5 * (df * PI).ln();
                let c = log_c.exp();
                let f = |t: f64| t * t * c * (1.0 + t * t / df).powf(-0.5 * (df + 1.0));
                k * k * 2.0 * adaptive_simpson(&f, 0.0, level / k, 1e-13)
            }
        }
    }

    /// `Var(xi 1{|xi| <= level})`.
    pub fn truncated_variance(&self, level: f64) -> f64 {
        let m = self.truncated_mean(level);
        self.truncated_second_moment(level) - m * m
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            DistributionKind::StandardGaussian => StandardNormal.sample(rng),
            DistributionKind::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            DistributionKind::UniformStandardized => rng.random_range(-SQRT_3..=SQRT_3),
            DistributionKind::ExponentialCentered => {
                let e: f64 = Exp1.sample(rng);
                e - 1.0
            }
            DistributionKind::StudentTStandardized { df } => {
                let t = StudentT::new(df).expect("validated df").sample(rng);
                t * ((df - 2.0) / df).sqrt()
            }
        }
    }

    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        if let DistributionKind::StudentTStandardized { df } = self.kind {
            let t = StudentT::new(df).expect("validated df");
            let k = ((df - 2.0) / df).sqrt();
            out.iter_mut().for_each(|x| *x = t.sample(rng) * k);
        } else {
            out.iter_mut().for_each(|x| *x = self.draw(rng));
        }
    }
}

/// Draw `n` i.i.d. entries.
pub fn sample_sequence<R: Rng + ?Sized>(
    spec: &DistributionSpec,
    n: usize,
    rng: &mut R,
) -> Result<GeneratingSequence, GeneratorError> {
    let mut entries = vec![0.0; n];
    spec.fill(rng, &mut entries);
    let provenance = Provenance {
        distribution: spec.name().to_string(),
        seed: None,
    };
    Ok(GeneratingSequence::with_provenance(entries, provenance)?)
}

/// Truncation level `n^(1/(2+delta))`.
pub fn truncation_level(n: usize, delta: f64) -> f64 {
    (n as f64).powf(1.0 / (2.0 + delta))
}

/// Zero entries beyond the truncation level, then subtract the truncated mean.
pub fn truncate(seq: &GeneratingSequence, spec: &DistributionSpec) -> GeneratingSequence {
    let level = truncation_level(seq.len(), spec.delta);
    let shift = spec.truncated_mean(level);
    let entries = seq
        .entries()
        .iter()
        .map(|&x| if x.abs() <= level { x - shift } else { -shift })
        .collect();
    GeneratingSequence::with_provenance(entries, seq.provenance.clone())
        .expect("truncation preserves length and finiteness")
}

/// Scale of the Gaussian perturbation added by [`smooth`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingParams {
    pub n: usize,
    pub s_n: f64,
    pub eta: f64,
    pub truncated_variance: f64,
}

impl SmoothingParams {
    /// `s_n = sqrt(Var(truncated xi)) * n^(-1/4 + (1 - eta) / (2 (2 + delta)))`.
    pub fn new(spec: &DistributionSpec, n: usize, eta: f64) -> Result<Self, GeneratorError> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(GeneratorError::InvalidEta(eta));
        }
        let var = spec.truncated_variance(truncation_level(n, spec.delta));
        let exponent = -0.25 + (1.0 - eta) / (2.0 * (2.0 + spec.delta));
        Ok(Self {
            n,
            s_n: var.sqrt() * (n as f64).powf(exponent),
            eta,
            truncated_variance: var,
        })
    }

    /// Exponent of `n` in `s_n`.
    pub fn exponent(delta: f64, eta: f64) -> f64 {
        -0.25 + (1.0 - eta) / (2.0 * (2.0 + delta))
    }
}

/// `xi_j + s_n N_j` with independent standard Gaussian `N_j` from `rng`.
pub fn smooth<R: Rng + ?Sized>(
    seq: &GeneratingSequence,
    params: &SmoothingParams,
    rng: &mut R,
) -> Result<GeneratingSequence, GeneratorError> {
    let noise: Vec<f64> = (0..seq.len()).map(|_| StandardNormal.sample(rng)).collect();
    smooth_with_noise(seq, params, &noise)
}

/// [`smooth`] with the Gaussian draws supplied by the caller.
pub fn smooth_with_noise(
    seq: &GeneratingSequence,
    params: &SmoothingParams,
    noise: &[f64],
) -> Result<GeneratingSequence, GeneratorError> {
    if params.n != seq.len() || noise.len() != seq.len() {
        return Err(GeneratorError::LengthMismatch {
            expected: seq.len(),
            got: if params.n != seq.len() { params.n } else { noise.len() },
        });
    }
    let entries = seq
        .entries()
        .iter()
        .zip(noise)
        .map(|(&x, &z)| x + params.s_n * z)
        .collect();
    Ok(GeneratingSequence::with_provenance(
        entries,
        seq.provenance.clone(),
    )?)
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 48)
}
