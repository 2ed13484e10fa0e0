//! Self-contained oracle and property checks.
//!
//! Each check compares two independent routes to the same quantity: the
//! fast transform against the quadratic sum, the closed-form min/max law
//! against enumeration and simulation, Bonferroni bounds against exhaustive
//! unions, and the Rayleigh/Fréchet/exponential transforms against sampled
//! data. The report is a pure function of the options.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::circulant::{spectrum, spectrum_naive, CirculantTransform, GeneratingSequence};
use crate::generators::{truncation_level, DistributionKind, DistributionSpec};
use crate::laws::{exponential_cdf, frechet_cdf, rayleigh_cdf, LimitLaw};
use crate::stats::{
    bonferroni_bounds, intersection_sums_independent, ks_critical_95, ks_statistic,
    minmax_joint_oracle, EmpiricalSample,
};
use crate::streams::{derive_stream, Stream, StreamRole};

/// Lengths covering prime, composite and power-of-two transforms.
pub const DFT_LENGTHS: [usize; 7] = [3, 5, 8, 17, 128, 257, 512];
/// Relative tolerance of the exact identities.
pub const EXACT_TOL: f64 = 1e-9;
/// Sample size of the distributional transform checks.
pub const KS_SAMPLE: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckDepth {
    Quick,
    Full,
}

impl CheckDepth {
    fn inputs_per_length(self) -> usize {
        match self {
            CheckDepth::Quick => 10,
            CheckDepth::Full => 100,
        }
    }

    fn monte_carlo_size(self) -> usize {
        match self {
            CheckDepth::Quick => 20_000,
            CheckDepth::Full => 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOptions {
    pub seed: u64,
    pub depth: CheckDepth,
    /// Replace the fast transform by one with the wrong exponent sign.
    pub inject_fault: bool,
}

impl CheckOptions {
    pub fn new(seed: u64, depth: CheckDepth) -> Self {
        Self {
            seed,
            depth,
            inject_fault: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{status} {} {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub outcomes: Vec<CheckOutcome>,
}

impl CheckReport {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.pass)
    }

    pub fn first_failure(&self) -> Option<&CheckOutcome> {
        self.outcomes.iter().find(|o| !o.pass)
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for o in &self.outcomes {
            writeln!(f, "{o}")?;
        }
        Ok(())
    }
}

fn outcome(name: &'static str, worst: f64, tol: f64, what: &str) -> CheckOutcome {
    CheckOutcome {
        name,
        pass: worst <= tol,
        detail: format!("{what}={worst:.3e} tolerance={tol:.3e}"),
    }
}

fn gaussian_sequence(rng: &mut Stream, n: usize) -> GeneratingSequence {
    let entries = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    GeneratingSequence::new(entries).expect("n >= 3 and Gaussian draws are finite")
}

/// Run every check in a fixed order.
pub fn run_checks(options: &CheckOptions) -> CheckReport {
    let mut outcomes = Vec::new();
    outcomes.extend(transform_checks(options));
    outcomes.push(truncation_identity(options));
    outcomes.push(minmax_enumeration());
    outcomes.push(minmax_monte_carlo(options));
    outcomes.push(bonferroni_enumeration());
    outcomes.push(frechet_from_rayleigh(options));
    outcomes.push(exponential_from_gaussian_pair(options));
    outcomes.push(ks_invariance(options));
    CheckReport { outcomes }
}

/// Fast vs naive transform, Parseval, conjugate symmetry, round trip.
fn transform_checks(options: &CheckOptions) -> Vec<CheckOutcome> {
    let (mut dft, mut parseval, mut symmetry, mut round_trip) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (li, &n) in DFT_LENGTHS.iter().enumerate() {
        let fast = if options.inject_fault {
            CirculantTransform::with_flipped_sign(n)
        } else {
            CirculantTransform::new(n)
        }
        .expect("lengths are at least 3");
        let mut rng = derive_stream(options.seed, n as u64, 0, StreamRole::Auxiliary(li as u32));
        for _ in 0..options.depth.inputs_per_length() {
            let seq = gaussian_sequence(&mut rng, n);
            let energy: f64 = seq.entries().iter().map(|x| x * x).sum();
            let got = fast.spectrum(&seq).expect("length matches the plan");
            let want = spectrum_naive(&seq).expect("lengths are within the naive limit");

            // components near zero are compared on the scale of the rms modulus
            let rms = energy.sqrt();
            for (a, b) in got.eigenvalues.iter().zip(&want.eigenvalues) {
                dft = dft.max((a - b).norm() / b.norm().max(rms));
            }

            let spectral: f64 = got.moduli.iter().map(|m| m * m).sum();
            parseval = parseval.max((spectral - n as f64 * energy).abs() / (n as f64 * energy));
            symmetry = symmetry.max(got.conjugate_asymmetry() / rms);

            let back = fast.reconstruct(&got).expect("real input gives a symmetric spectrum");
            let scale = seq.entries().iter().fold(0.0f64, |m, x| m.max(x.abs()));
            for (a, b) in back.entries().iter().zip(seq.entries()) {
                round_trip = round_trip.max((a - b).abs() / scale);
            }
        }
    }
    vec![
        outcome("dft_naive_vs_fast", dft, EXACT_TOL, "max_relative_error"),
        outcome("parseval", parseval, EXACT_TOL, "max_relative_error"),
        outcome("conjugate_symmetry", symmetry, EXACT_TOL, "max_relative_error"),
        outcome("reconstruct_round_trip", round_trip, EXACT_TOL, "max_relative_error"),
    ]
}

/// Centering the truncated entries leaves every non-zero frequency unchanged.
fn truncation_identity(options: &CheckOptions) -> CheckOutcome {
    let cases = [
        (DistributionSpec::with_default_delta(DistributionKind::ExponentialCentered), 64usize),
        (DistributionSpec::gaussian(), 10_000),
    ];
    let mut worst = 0.0f64;
    for (ci, (spec, n)) in cases.iter().enumerate() {
        let mut rng = derive_stream(options.seed, *n as u64, 0, StreamRole::Auxiliary(100 + ci as u32));
        let raw: Vec<f64> = (0..*n).map(|_| spec.draw(&mut rng)).collect();
        let level = truncation_level(*n, spec.delta);
        let shift = spec.truncated_mean(level);
        let clipped: Vec<f64> = raw.iter().map(|&x| if x.abs() <= level { x } else { 0.0 }).collect();
        let centered: Vec<f64> = clipped.iter().map(|&x| x - shift).collect();

        let lhs = spectrum(&GeneratingSequence::new(centered).expect("finite")).expect("n >= 3");
        let clipped = GeneratingSequence::new(clipped).expect("finite");
        let rhs = if *n <= crate::circulant::NAIVE_MAX_LEN {
            spectrum_naive(&clipped)
        } else {
            spectrum(&clipped)
        }
        .expect("n >= 3");
        let scale = rhs.moduli.iter().fold(0.0f64, |m, &x| m.max(x));
        for k in 1..*n {
            worst = worst.max((lhs.eigenvalues[k] - rhs.eigenvalues[k]).norm() / scale);
        }
    }
    outcome("truncation_geometric_sum", worst, EXACT_TOL, "max_relative_error")
}

/// Uniform pair on a midpoint lattice: the oracle must match the count exactly.
fn minmax_enumeration() -> CheckOutcome {
    let uniform = |x: f64| x.clamp(0.0, 1.0);
    let mut worst = 0.0f64;
    for cells in [8usize, 16, 32] {
        let points: Vec<f64> = (0..cells).map(|i| (i as f64 + 0.5) / cells as f64).collect();
        for &(s, t) in &[(0.25, 0.75), (0.5, 0.5), (0.125, 0.875), (0.75, 0.25), (0.0, 1.0)] {
            let hits = points
                .iter()
                .flat_map(|&a| points.iter().map(move |&b| (a, b)))
                .filter(|&(a, b)| a.min(b) <= s && a.max(b) <= t)
                .count();
            let exact = hits as f64 / (cells * cells) as f64;
            let oracle = minmax_joint_oracle(&[&uniform, &uniform], s, t);
            worst = worst.max((oracle - exact).abs());
        }
    }
    outcome("minmax_oracle_enumeration", worst, 1e-15, "max_abs_error")
}

/// Oracle against simulated min/max frequencies, within `3/sqrt(N)`.
fn minmax_monte_carlo(options: &CheckOptions) -> CheckOutcome {
    let n = options.depth.monte_carlo_size();
    let mut rng = derive_stream(options.seed, 0, 0, StreamRole::Auxiliary(200));
    let uniform = |x: f64| x.clamp(0.0, 1.0);
    let rates = [0.5, 1.0, 2.0];
    let e0 = move |x: f64| exponential_cdf(rates[0], x);
    let e1 = move |x: f64| exponential_cdf(rates[1], x);
    let e2 = move |x: f64| exponential_cdf(rates[2], x);

    let pairs: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let (a, b): (f64, f64) = (rng.random(), rng.random());
            (a.min(b), a.max(b))
        })
        .collect();
    let triples: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let v = rates.map(|r| LimitLaw::Exponential { rate: r }.sample(&mut rng));
            (v.iter().cloned().fold(f64::INFINITY, f64::min), v.iter().cloned().fold(0.0, f64::max))
        })
        .collect();

    let freq = |data: &[(f64, f64)], s: f64, t: f64| {
        data.iter().filter(|&&(lo, hi)| lo <= s && hi <= t).count() as f64 / data.len() as f64
    };
    let mut worst = 0.0f64;
    for &(s, t) in &[(0.25, 0.75), (0.1, 0.5), (0.5, 0.9), (0.3, 0.3)] {
        let gap = (freq(&pairs, s, t) - minmax_joint_oracle(&[&uniform, &uniform], s, t)).abs();
        worst = worst.max(gap);
    }
    for &(s, t) in &[(0.2, 1.0), (0.5, 2.0), (0.1, 3.0), (1.0, 4.0)] {
        let gap = (freq(&triples, s, t) - minmax_joint_oracle(&[&e0, &e1, &e2], s, t)).abs();
        worst = worst.max(gap);
    }
    outcome("minmax_oracle_monte_carlo", worst, 3.0 / (n as f64).sqrt(), "max_abs_gap")
}

/// Bonferroni bounds bracket every union built from four independent events.
///
/// Base events `B_1..B_4` are independent with probabilities in
/// `{0.25, 0.5}`; each tested event is an intersection of base events, so
/// the systems include dependent families. Exact unions and intersection
/// sums come from enumerating the 16 outcomes of the base events.
fn bonferroni_enumeration() -> CheckOutcome {
    const BASE: usize = 4;
    let mut violations = 0usize;
    let mut systems = 0usize;
    let mut sums_gap = 0.0f64;
    for mask in 0..(1u32 << BASE) {
        let probs: Vec<f64> = (0..BASE).map(|i| if mask >> i & 1 == 1 { 0.5 } else { 0.25 }).collect();
        let weight = |outcome: u32| -> f64 {
            (0..BASE)
                .map(|i| if outcome >> i & 1 == 1 { probs[i] } else { 1.0 - probs[i] })
                .product()
        };
        // events are the non-empty subsets of base events, as bitmasks
        let events: Vec<u32> = (1..(1u32 << BASE)).collect();
        for family in families(&events, 4) {
            systems += 1;
            let m = family.len();
            let occurs = |outcome: u32, e: u32| outcome & e == e;
            let union: f64 = (0..(1u32 << BASE))
                .filter(|&o| family.iter().any(|&e| occurs(o, e)))
                .map(weight)
                .sum();
            let mut s_sums = vec![0.0; 4];
            for sub in 1..(1u32 << m) {
                let joint = family
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| sub >> i & 1 == 1)
                    .fold(0u32, |acc, (_, &e)| acc | e);
                let p: f64 = (0..(1u32 << BASE)).filter(|&o| occurs(o, joint)).map(weight).sum();
                s_sums[sub.count_ones() as usize - 1] += p;
            }
            for ell in 1..=2 {
                let (lo, hi) = bonferroni_bounds(&s_sums, ell).expect("four sums cover depth two");
                if lo > union + 1e-12 || union > hi + 1e-12 {
                    violations += 1;
                }
            }
            // families of distinct base events must agree with the product formula
            if family.iter().all(|e| e.count_ones() == 1) {
                let p: Vec<f64> = family.iter().map(|e| probs[e.trailing_zeros() as usize]).collect();
                let mut closed = intersection_sums_independent(&p);
                closed.resize(4, 0.0);
                for (a, b) in closed.iter().zip(&s_sums) {
                    sums_gap = sums_gap.max((a - b).abs());
                }
            }
        }
    }
    CheckOutcome {
        name: "bonferroni_enumeration",
        pass: violations == 0 && sums_gap <= 1e-12,
        detail: format!("systems={systems} violations={violations} sums_gap={sums_gap:.3e}"),
    }
}

/// All families of 1..=max_size distinct events.
fn families(events: &[u32], max_size: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn recurse(events: &[u32], start: usize, max: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        for i in start..events.len() {
            cur.push(events[i]);
            out.push(cur.clone());
            if cur.len() < max {
                recurse(events, i + 1, max, cur, out);
            }
            cur.pop();
        }
    }
    recurse(events, 0, max_size, &mut current, &mut out);
    out
}

fn rayleigh_via_gaussians(rng: &mut Stream) -> f64 {
    let (a, b): (f64, f64) = (StandardNormal.sample(rng), StandardNormal.sample(rng));
    a.hypot(b)
}

/// `sqrt(2) / X` is Fréchet when `X` is Rayleigh.
fn frechet_from_rayleigh(options: &CheckOptions) -> CheckOutcome {
    let mut rng = derive_stream(options.seed, 0, 0, StreamRole::Auxiliary(300));
    let values = (0..KS_SAMPLE)
        .map(|_| std::f64::consts::SQRT_2 / rayleigh_via_gaussians(&mut rng))
        .collect();
    let sample = EmpiricalSample::from_values(values).expect("no NaN");
    let d = ks_statistic(&sample, frechet_cdf);
    outcome("frechet_from_rayleigh", d, ks_critical_95(KS_SAMPLE), "ks")
}

/// `X_1^2 + X_2^2` is exponential with rate `1/(2 sigma^2)`.
fn exponential_from_gaussian_pair(options: &CheckOptions) -> CheckOutcome {
    let sigma = 1.7;
    let mut rng = derive_stream(options.seed, 0, 0, StreamRole::Auxiliary(301));
    let values = (0..KS_SAMPLE)
        .map(|_| {
            let (a, b): (f64, f64) = (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
            (sigma * a).powi(2) + (sigma * b).powi(2)
        })
        .collect();
    let sample = EmpiricalSample::from_values(values).expect("no NaN");
    let rate = 1.0 / (2.0 * sigma * sigma);
    let d = ks_statistic(&sample, |x| exponential_cdf(rate, x));
    outcome("exponential_from_gaussian_pair", d, ks_critical_95(KS_SAMPLE), "ks")
}

/// KS distance is invariant under the monotone map `x -> x^2`.
fn ks_invariance(options: &CheckOptions) -> CheckOutcome {
    let mut rng = derive_stream(options.seed, 0, 0, StreamRole::Auxiliary(302));
    let raw: Vec<f64> = (0..KS_SAMPLE).map(|_| rayleigh_via_gaussians(&mut rng)).collect();
    let squares = raw.iter().map(|x| x * x).collect();
    let d1 = ks_statistic(&EmpiricalSample::from_values(raw).expect("no NaN"), rayleigh_cdf);
    let d2 = ks_statistic(
        &EmpiricalSample::from_values(squares).expect("no NaN"),
        |x| exponential_cdf(0.5, x),
    );
    outcome("ks_monotone_invariance", (d1 - d2).abs(), 1e-12, "abs_difference")
}
