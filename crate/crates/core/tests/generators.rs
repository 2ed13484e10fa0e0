//! Truncation and smoothing against the spectrum, end to end.

use circex::generators::{
    sample_sequence, smooth, smooth_with_noise, truncate, truncation_level, DistributionKind,
    DistributionSpec, SmoothingParams,
};
use circex::streams::{derive_stream, StreamRole};
use circex::{spectrum, spectrum_naive, GeneratingSequence};
use rand_distr::{Distribution, StandardNormal};

fn kinds() -> Vec<DistributionSpec> {
    [
        DistributionKind::StandardGaussian,
        DistributionKind::Rademacher,
        DistributionKind::UniformStandardized,
        DistributionKind::ExponentialCentered,
        DistributionKind::StudentTStandardized { df: 5.0 },
    ]
    .into_iter()
    .map(DistributionSpec::with_default_delta)
    .collect()
}

#[test]
fn truncated_entries_are_bounded() {
    for spec in kinds() {
        for n in [64usize, 1024, 16384] {
            let mut rng = derive_stream(3, n as u64, 0, StreamRole::Entries);
            let s = sample_sequence(&spec, n, &mut rng).unwrap();
            let level = truncation_level(n, spec.delta);
            let shift = spec.truncated_mean(level);
            assert!(shift.abs() <= level);
            for x in truncate(&s, &spec).entries() {
                assert!(x.abs() <= level + shift.abs() + 1e-12, "{spec} n={n}");
                assert!(x.abs() <= 2.0 * level);
            }
        }
    }
}

#[test]
fn truncation_keeps_nonzero_frequencies_of_the_clipped_sequence() {
    // exceedances are common for the centered exponential at small n
    let spec = DistributionSpec::with_default_delta(DistributionKind::ExponentialCentered);
    let n = 64;
    let level = truncation_level(n, spec.delta);
    let mut checked = 0;
    for r in 0..20 {
        let mut rng = derive_stream(5, n as u64, r, StreamRole::Entries);
        let s = sample_sequence(&spec, n, &mut rng).unwrap();
        let clipped: Vec<f64> = s.entries().iter().map(|&x| if x.abs() <= level { x } else { 0.0 }).collect();
        checked += usize::from(clipped != s.entries());
        let lhs = spectrum(&truncate(&s, &spec)).unwrap();
        let rhs = spectrum_naive(&GeneratingSequence::new(clipped).unwrap()).unwrap();
        let scale = rhs.moduli.iter().cloned().fold(1.0, f64::max);
        for k in 1..n {
            assert!((lhs.eigenvalues[k] - rhs.eigenvalues[k]).norm() <= 1e-9 * scale);
        }
    }
    assert!(checked > 0, "no replication exercised an exceedance");
}

#[test]
fn gaussian_truncation_leaves_spectrum_unchanged_without_exceedances() {
    let spec = DistributionSpec::gaussian();
    let n = 10_000;
    let mut rng = derive_stream(8, n as u64, 0, StreamRole::Entries);
    let s = sample_sequence(&spec, n, &mut rng).unwrap();
    assert!(s.entries().iter().all(|x| x.abs() <= truncation_level(n, 1.0)));
    let a = spectrum(&s).unwrap();
    let b = spectrum(&truncate(&s, &spec)).unwrap();
    let scale = a.moduli.iter().cloned().fold(0.0, f64::max);
    for k in 1..n {
        assert!((a.eigenvalues[k] - b.eigenvalues[k]).norm() <= 1e-9 * scale);
    }
}

#[test]
fn smoothing_is_linear_in_the_spectrum() {
    for spec in kinds() {
        let n = 384;
        let params = SmoothingParams::new(&spec, n, 0.05).unwrap();
        let mut rng = derive_stream(1, n as u64, 0, StreamRole::Entries);
        let s = truncate(&sample_sequence(&spec, n, &mut rng).unwrap(), &spec);

        let mut noise_rng = derive_stream(1, n as u64, 0, StreamRole::Smoothing);
        let smoothed = smooth(&s, &params, &mut noise_rng).unwrap();
        // replay the same draws
        let mut replay = derive_stream(1, n as u64, 0, StreamRole::Smoothing);
        let noise: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut replay)).collect();
        assert_eq!(smoothed, smooth_with_noise(&s, &params, &noise).unwrap());

        let lhs = spectrum(&smoothed).unwrap();
        let base = spectrum(&s).unwrap();
        let gamma = spectrum(&GeneratingSequence::new(noise).unwrap()).unwrap();
        let scale = lhs.moduli.iter().cloned().fold(1.0, f64::max);
        for k in 0..n {
            let diff = lhs.eigenvalues[k] - base.eigenvalues[k];
            assert!((diff - gamma.eigenvalues[k] * params.s_n).norm() <= 1e-9 * scale, "{spec}");
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// `max_{k>=1} ||lambda_k| - |lambda~_k||` for each replication.
fn truncation_gaps(spec: &DistributionSpec, n: usize, reps: u64) -> Vec<f64> {
    (0..reps)
        .map(|r| {
            let mut rng = derive_stream(21, n as u64, r, StreamRole::Entries);
            let s = sample_sequence(spec, n, &mut rng).unwrap();
            let a = spectrum(&s).unwrap();
            let b = spectrum(&truncate(&s, spec)).unwrap();
            (1..n)
                .map(|k| (a.moduli[k] - b.moduli[k]).abs())
                .fold(0.0, f64::max)
        })
        .collect()
}

fn truncation_gap_median(spec: &DistributionSpec, n: usize, reps: u64) -> f64 {
    median(truncation_gaps(spec, n, reps))
}

#[test]
fn truncation_gap_median_does_not_grow() {
    for spec in [
        DistributionSpec::gaussian(),
        DistributionSpec::with_default_delta(DistributionKind::StudentTStandardized { df: 5.0 }),
    ] {
        let medians: Vec<f64> = [1usize << 10, 1 << 14, 1 << 18]
            .iter()
            .map(|&n| truncation_gap_median(&spec, n, 100))
            .collect();
        for w in medians.windows(2) {
            assert!(w[1] <= w[0], "{spec}: {medians:?}");
        }
    }
}

#[test]
fn exponential_gap_shrinks_from_small_n() {
    // heavier right tail: exceedances occur at small n and die out
    let spec = DistributionSpec::with_default_delta(DistributionKind::ExponentialCentered);
    let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    let small = mean(truncation_gaps(&spec, 16, 400));
    let large = mean(truncation_gaps(&spec, 4096, 400));
    assert!(small > 0.1, "{small}");
    assert!(large <= small, "{small} vs {large}");
}
