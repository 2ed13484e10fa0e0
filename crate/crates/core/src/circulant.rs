//! Spectra of circulant matrices.
//!
//! `circ(xi_0, ..., xi_{n-1})` is diagonalized by the Fourier matrix, so its
//! eigenvalues are `lambda_k = sum_j xi_j exp(2 pi i k j / n)` and, the
//! matrix being normal, its singular values are the moduli `|lambda_k|`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::laws::{normalizers, NormalizingConstants, MIN_DIMENSION};
use crate::CirculantError;

/// Largest length accepted by [`spectrum_naive`].
pub const NAIVE_MAX_LEN: usize = 4096;

/// Tolerance on conjugate symmetry accepted by [`reconstruct`], relative to
/// the largest modulus.
pub const CONJUGATE_SYMMETRY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Provenance {
    pub distribution: String,
    pub seed: Option<u64>,
}

/// First row `(xi_0, ..., xi_{n-1})` of a circulant matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingSequence {
    entries: Vec<f64>,
    pub provenance: Provenance,
}

impl GeneratingSequence {
    pub fn new(entries: Vec<f64>) -> Result<Self, CirculantError> {
        Self::with_provenance(entries, Provenance::default())
    }

    pub fn with_provenance(
        entries: Vec<f64>,
        provenance: Provenance,
    ) -> Result<Self, CirculantError> {
        if entries.len() < MIN_DIMENSION {
            return Err(CirculantError::TooShort(entries.len()));
        }
        if let Some(index) = entries.iter().position(|v| !v.is_finite()) {
            return Err(CirculantError::NonFinite { index });
        }
        Ok(Self {
            entries,
            provenance,
        })
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn into_entries(self) -> Vec<f64> {
        self.entries
    }

    /// Dense `n x n` matrix, row `i` being the first row shifted right by `i`.
    pub fn dense_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        (0..n)
            .map(|i| (0..n).map(|j| self.entries[(j + n - i) % n]).collect())
            .collect()
    }
}

/// Eigenvalues of a circulant matrix and their moduli.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    pub moduli: Vec<f64>,
}

impl Spectrum {
    pub fn from_eigenvalues(eigenvalues: Vec<Complex64>) -> Self {
        let moduli = eigenvalues.iter().map(|z| z.norm()).collect();
        Self {
            eigenvalues,
            moduli,
        }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Largest `|lambda_k - conj(lambda_{n-k})|` over `k`, with `n - 0 = 0`.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|k| (self.eigenvalues[k] - self.eigenvalues[(n - k) % n].conj()).norm())
            .fold(0.0, f64::max)
    }
}

/// Planned O(n log n) transform for one length, shareable across threads.
#[derive(Clone)]
pub struct CirculantTransform {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CirculantTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CirculantTransform").field("n", &self.n).finish()
    }
}

impl CirculantTransform {
    pub fn new(n: usize) -> Result<Self, CirculantError> {
        Self::planned(n, false)
    }

    /// A deliberately wrong transform using `exp(-2 pi i k j / n)`; exists so
    /// the oracle suite can demonstrate that it catches a sign error.
    #[doc(hidden)]
    pub fn with_flipped_sign(n: usize) -> Result<Self, CirculantError> {
        Self::planned(n, true)
    }

    fn planned(n: usize, flip: bool) -> Result<Self, CirculantError> {
        if n < MIN_DIMENSION {
            return Err(CirculantError::TooShort(n));
        }
        let mut planner = FftPlanner::new();
        // rustfft's "inverse" is the unnormalized exp(+2 pi i k j / n) sum
        let (eig, inv) = if flip {
            (FftDirection::Forward, FftDirection::Inverse)
        } else {
            (FftDirection::Inverse, FftDirection::Forward)
        };
        Ok(Self {
            n,
            forward: planner.plan_fft(n, eig),
            inverse: planner.plan_fft(n, inv),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spectrum(&self, seq: &GeneratingSequence) -> Result<Spectrum, CirculantError> {
        self.check_len(seq.len())?;
        let mut buf: Vec<Complex64> = seq
            .entries()
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect();
        self.forward.process(&mut buf);
        Ok(Spectrum::from_eigenvalues(buf))
    }

    /// Moduli only, reusing caller-provided buffers.
    pub fn moduli_into(
        &self,
        entries: &[f64],
        buf: &mut Vec<Complex64>,
        scratch: &mut Vec<Complex64>,
        out: &mut Vec<f64>,
    ) -> Result<(), CirculantError> {
        self.check_len(entries.len())?;
        buf.clear();
        buf.extend(entries.iter().map(|&x| Complex64::new(x, 0.0)));
        scratch.resize(self.forward.get_inplace_scratch_len(), Complex64::default());
        self.forward.process_with_scratch(buf, scratch);
        out.clear();
        out.extend(buf.iter().map(|z| z.norm()));
        Ok(())
    }

    pub fn reconstruct(&self, spectrum: &Spectrum) -> Result<GeneratingSequence, CirculantError> {
        self.check_len(spectrum.len())?;
        let scale = spectrum.moduli.iter().cloned().fold(1.0, f64::max);
        let asym = spectrum.conjugate_asymmetry();
        if asym > CONJUGATE_SYMMETRY_TOL * scale {
            return Err(CirculantError::NotConjugateSymmetric(asym));
        }
        let mut buf = spectrum.eigenvalues.clone();
        self.inverse.process(&mut buf);
        let inv_n = 1.0 / self.n as f64;
        GeneratingSequence::new(buf.iter().map(|z| z.re * inv_n).collect())
    }

    fn check_len(&self, got: usize) -> Result<(), CirculantError> {
        if got != self.n {
            return Err(CirculantError::LengthMismatch {
                expected: self.n,
                got,
            });
        }
        Ok(())
    }
}

/// Eigenvalues of `circ(seq)` by a planned fast transform (any length).
pub fn spectrum(seq: &GeneratingSequence) -> Result<Spectrum, CirculantError> {
    CirculantTransform::new(seq.len())?.spectrum(seq)
}

/// Eigenvalues by direct evaluation of the defining double sum.
///
/// Twiddles are taken from an exact table of `exp(2 pi i m / n)` indexed by
/// `k j mod n`, so accuracy does not degrade with the size of `k j`.
pub fn spectrum_naive(seq: &GeneratingSequence) -> Result<Spectrum, CirculantError> {
    let n = seq.len();
    if n > NAIVE_MAX_LEN {
        return Err(CirculantError::NaiveTooLong(n));
    }
    let table: Vec<Complex64> = (0..n)
        .map(|m| Complex64::from_polar(1.0, 2.0 * PI * m as f64 / n as f64))
        .collect();
    let eig = (0..n)
        .map(|k| {
            seq.entries()
                .iter()
                .enumerate()
                .map(|(j, &x)| table[(k * j) % n] * x)
                .sum()
        })
        .collect();
    Ok(Spectrum::from_eigenvalues(eig))
}

/// Recover the first row from a conjugate-symmetric spectrum.
pub fn reconstruct(spectrum: &Spectrum) -> Result<GeneratingSequence, CirculantError> {
    CirculantTransform::new(spectrum.len())?.reconstruct(spectrum)
}

/// Extremal singular values and condition number of one realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremalStats {
    pub n: usize,
    pub p: u32,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// `sigma_max / sigma_min`; `None` when `sigma_min = 0`.
    pub kappa: Option<f64>,
    pub norm_min: f64,
    /// `(sigma_max - A_n(p)) / B_n(p)`.
    pub norm_max: f64,
    /// `kappa / kappa_scale^p`.
    pub norm_kappa: Option<f64>,
    pub include_zero_index: bool,
}

impl ExtremalStats {
    fn from_raw(
        sigma_min: f64,
        sigma_max: f64,
        kappa: Option<f64>,
        consts: &NormalizingConstants,
        include_zero_index: bool,
    ) -> Self {
        Self {
            n: consts.n,
            p: consts.p,
            sigma_min,
            sigma_max,
            kappa,
            norm_min: sigma_min,
            norm_max: (sigma_max - consts.a_pow) / consts.b_pow,
            norm_kappa: kappa.map(|k| k / consts.kappa_scale_pow()),
            include_zero_index,
        }
    }
}

/// `(min, max)` of the moduli over `k in 0..n` or `k in 1..n`.
pub fn extremal_moduli(moduli: &[f64], include_zero_index: bool) -> (f64, f64) {
    let start = usize::from(!include_zero_index);
    moduli[start..]
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &m| (lo.min(m), hi.max(m)))
}

/// Extremal statistics from a list of singular values.
pub fn extremal_stats_from_moduli(
    moduli: &[f64],
    consts: &NormalizingConstants,
    include_zero_index: bool,
) -> Result<ExtremalStats, CirculantError> {
    if moduli.len() != consts.n {
        return Err(CirculantError::LengthMismatch {
            expected: consts.n,
            got: moduli.len(),
        });
    }
    let (lo, hi) = extremal_moduli(moduli, include_zero_index);
    let kappa = (lo > 0.0).then(|| hi / lo);
    let base = if consts.p == 1 {
        *consts
    } else {
        normalizers(consts.n, 1)?
    };
    Ok(ExtremalStats::from_raw(lo, hi, kappa, &base, include_zero_index))
}

/// Extremal singular values, condition number and their normalizations.
pub fn extremal_stats(
    spectrum: &Spectrum,
    consts: &NormalizingConstants,
    include_zero_index: bool,
) -> Result<ExtremalStats, CirculantError> {
    extremal_stats_from_moduli(&spectrum.moduli, consts, include_zero_index)
}

/// Statistics of `C^p` from those of `C`.
///
/// `C^p` is circulant with eigenvalues `lambda_k^p`, so every raw field is
/// raised to the `p`-th power and the normalizations switch to the power
/// constants.
pub fn power_stats(stats: &ExtremalStats, p: u32) -> Result<ExtremalStats, CirculantError> {
    if stats.p != 1 {
        return Err(CirculantError::AlreadyPowered(stats.p));
    }
    let consts = normalizers(stats.n, p)?;
    let e = p as i32;
    Ok(ExtremalStats::from_raw(
        stats.sigma_min.powi(e),
        stats.sigma_max.powi(e),
        stats.kappa.map(|k| k.powi(e)),
        &consts,
        stats.include_zero_index,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn seq(v: &[f64]) -> GeneratingSequence {
        GeneratingSequence::new(v.to_vec()).unwrap()
    }

    fn assert_spectrum(s: &Spectrum, expected: &[(f64, f64)]) {
        for (z, &(re, im)) in s.eigenvalues.iter().zip(expected) {
            assert_abs_diff_eq!(z.re, re, epsilon = 1e-12);
            assert_abs_diff_eq!(z.im, im, epsilon = 1e-12);
        }
    }

    #[test]
    fn delta_sequence_has_unit_spectrum() {
        let s = seq(&[1.0, 0.0, 0.0, 0.0]);
        assert_spectrum(&spectrum(&s).unwrap(), &[(1.0, 0.0); 4]);
        assert_spectrum(&spectrum_naive(&s).unwrap(), &[(1.0, 0.0); 4]);
    }

    #[test]
    fn constant_sequence_concentrates_at_zero_frequency() {
        for n in [3usize, 7, 12] {
            let s = seq(&vec![2.5; n]);
            let mut expected = vec![(0.0, 0.0); n];
            expected[0] = (2.5 * n as f64, 0.0);
            assert_spectrum(&spectrum(&s).unwrap(), &expected);
            assert_spectrum(&spectrum_naive(&s).unwrap(), &expected);
        }
    }

    #[test]
    fn alternating_sequence_is_pure_nyquist() {
        let s = seq(&[1.0, -1.0, 1.0, -1.0]);
        let expected = [(0.0, 0.0), (0.0, 0.0), (4.0, 0.0), (0.0, 0.0)];
        assert_spectrum(&spectrum(&s).unwrap(), &expected);
        assert_spectrum(&spectrum_naive(&s).unwrap(), &expected);
    }

    #[test]
    fn sign_convention_is_positive_exponent() {
        // xi = e_1: lambda_k = omega^k = exp(2 pi i k / n)
        let s = seq(&[0.0, 1.0, 0.0, 0.0, 0.0]);
        let sp = spectrum(&s).unwrap();
        for k in 0..5 {
            let w = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 5.0);
            assert_abs_diff_eq!((sp.eigenvalues[k] - w).norm(), 0.0, epsilon = 1e-14);
        }
        let flipped = CirculantTransform::with_flipped_sign(5)
            .unwrap()
            .spectrum(&s)
            .unwrap();
        assert!((flipped.eigenvalues[1] - sp.eigenvalues[1]).norm() > 1.0);
    }

    #[test]
    fn rejects_bad_sequences() {
        assert!(matches!(
            GeneratingSequence::new(vec![1.0, 2.0]),
            Err(CirculantError::TooShort(2))
        ));
        assert!(matches!(
            GeneratingSequence::new(vec![1.0, f64::NAN, 0.0]),
            Err(CirculantError::NonFinite { index: 1 })
        ));
        let long = seq(&vec![0.0; NAIVE_MAX_LEN + 1]);
        assert!(matches!(
            spectrum_naive(&long),
            Err(CirculantError::NaiveTooLong(_))
        ));
    }

    #[test]
    fn reconstruct_examples() {
        let s = seq(&[1.0, 0.0, 0.0, 0.0]);
        let back = reconstruct(&spectrum(&s).unwrap()).unwrap();
        for (a, b) in back.entries().iter().zip(s.entries()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        let ones = Spectrum::from_eigenvalues(vec![Complex64::new(1.0, 0.0); 6]);
        let delta = reconstruct(&ones).unwrap();
        assert_abs_diff_eq!(delta.entries()[0], 1.0, epsilon = 1e-15);
        for v in &delta.entries()[1..] {
            assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn reconstruct_rejects_complex_origin() {
        let mut eig = vec![Complex64::new(1.0, 0.0); 5];
        eig[1] = Complex64::new(1.0, 0.5);
        let err = reconstruct(&Spectrum::from_eigenvalues(eig)).unwrap_err();
        assert!(matches!(err, CirculantError::NotConjugateSymmetric(_)));
    }

    #[test]
    fn extremal_stats_examples() {
        let c4 = normalizers(4, 1).unwrap();
        let ones = Spectrum::from_eigenvalues(vec![Complex64::new(1.0, 0.0); 4]);
        let st = extremal_stats(&ones, &c4, true).unwrap();
        assert_eq!((st.sigma_min, st.sigma_max, st.kappa), (1.0, 1.0, Some(1.0)));
        assert_abs_diff_eq!(st.norm_max, (1.0 - c4.a_n) / c4.b_n, epsilon = 1e-15);
        assert_abs_diff_eq!(st.norm_kappa.unwrap(), 1.0 / c4.kappa_scale, epsilon = 1e-15);

        let constant = spectrum(&seq(&[0.7; 4])).unwrap();
        let st = extremal_stats(&constant, &c4, false).unwrap();
        assert_abs_diff_eq!(st.sigma_min, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(st.sigma_max, 0.0, epsilon = 1e-15);

        let alt = spectrum_naive(&seq(&[1.0, -1.0, 1.0, -1.0])).unwrap();
        let st = extremal_stats(&alt, &c4, true).unwrap();
        assert_abs_diff_eq!(st.sigma_min, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(st.sigma_max, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn exact_zero_gives_undefined_kappa() {
        let c4 = normalizers(4, 1).unwrap();
        let st = extremal_stats_from_moduli(&[0.0, 2.0, 4.0, 2.0], &c4, true).unwrap();
        assert_eq!(st.kappa, None);
        assert_eq!(st.norm_kappa, None);
        let st = extremal_stats_from_moduli(&[0.0, 2.0, 4.0, 2.0], &c4, false).unwrap();
        assert_eq!(st.kappa, Some(2.0));
    }

    #[test]
    fn extremal_stats_checks_length() {
        let c5 = normalizers(5, 1).unwrap();
        let ones = Spectrum::from_eigenvalues(vec![Complex64::new(1.0, 0.0); 4]);
        assert!(extremal_stats(&ones, &c5, true).is_err());
    }

    #[test]
    fn power_stats_examples() {
        let c = normalizers(16, 1).unwrap();
        let st = extremal_stats_from_moduli(&[2.0; 16], &c, true).unwrap();
        let same = power_stats(&st, 1).unwrap();
        assert_eq!(same, st);
        let cubed = power_stats(&st, 3).unwrap();
        assert_eq!(cubed.sigma_max, 8.0);
        assert_eq!(cubed.sigma_min, 8.0);
        assert_eq!(cubed.kappa, Some(1.0));
        let c3 = normalizers(16, 3).unwrap();
        assert_abs_diff_eq!(cubed.norm_max, (8.0 - c3.a_pow) / c3.b_pow, epsilon = 1e-12);
        assert_abs_diff_eq!(
            cubed.norm_kappa.unwrap(),
            1.0 / c3.kappa_scale.powi(3),
            epsilon = 1e-15
        );
        assert!(power_stats(&cubed, 2).is_err());
    }

    #[test]
    fn dense_matrix_layout() {
        let m = seq(&[1.0, 2.0, 3.0]).dense_matrix();
        assert_eq!(m[0], vec![1.0, 2.0, 3.0]);
        assert_eq!(m[1], vec![3.0, 1.0, 2.0]);
        assert_eq!(m[2], vec![2.0, 3.0, 1.0]);
    }
}
