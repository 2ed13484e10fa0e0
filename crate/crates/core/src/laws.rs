//! Closed-form limit laws for the extremal singular values of random
//! circulant matrices, their normalizing constants and the exact finite-`n`
//! joint law under standard Gaussian entries.
//!
//! Every function here is a pure function of its arguments.

use rand::Rng;
use libm::{erf, erfc};
use statrs::function::erf::erf_inv;

use crate::stats::independent_min_max_cdf;
use crate::LawError;

/// Smallest admissible matrix dimension (`ln(n/2)` must be positive).
pub const MIN_DIMENSION: usize = 3;

/// Rayleigh CDF `1 - exp(-x^2/2)`, zero for `x <= 0`.
pub fn rayleigh_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-0.5 * x * x).exp_m1()
    }
}

/// Gumbel CDF `exp(-exp(-y))`.
pub fn gumbel_cdf(y: f64) -> f64 {
    (-(-y).exp()).exp()
}

/// Fréchet CDF with shape 2: `exp(-z^-2)` for `z > 0`, zero otherwise.
pub fn frechet_cdf(z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else {
        (-1.0 / (z * z)).exp()
    }
}

/// Product law `R(x) G(y)` of the limiting (min, normalized max) pair.
pub fn joint_limit_cdf(x: f64, y: f64) -> f64 {
    rayleigh_cdf(x) * gumbel_cdf(y)
}

/// CDF of an exponential law with the given rate.
pub fn exponential_cdf(rate: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-rate * x).exp_m1()
    }
}

/// CDF of the chi-square law with one degree of freedom, `erf(sqrt(t/2))`.
pub fn chi_square1_cdf(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        erf((0.5 * t).sqrt())
    }
}

/// Survival function of chi-square(1), accurate in the upper tail.
fn chi_square1_sf(t: f64) -> f64 {
    if t <= 0.0 {
        1.0
    } else {
        erfc((0.5 * t).sqrt())
    }
}

/// `erf_inv` polished by one Newton step against the accurate `erf`.
fn refined_erf_inv(p: f64) -> f64 {
    let r = erf_inv(p);
    if !r.is_finite() {
        return r;
    }
    let slope = std::f64::consts::FRAC_2_SQRT_PI * (-r * r).exp();
    if slope > 0.0 {
        r - (erf(r) - p) / slope
    } else {
        r
    }
}

pub fn rayleigh_quantile(p: f64) -> f64 {
    (-2.0 * (-p).ln_1p()).sqrt()
}

pub fn gumbel_quantile(p: f64) -> f64 {
    -(-p.ln()).ln()
}

pub fn frechet_quantile(p: f64) -> f64 {
    (-p.ln()).powf(-0.5)
}

/// The five one-dimensional laws the toolkit compares against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitLaw {
    Rayleigh,
    Gumbel,
    Frechet,
    Exponential { rate: f64 },
    ChiSquare1,
}

impl LimitLaw {
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            LimitLaw::Rayleigh => rayleigh_cdf(x),
            LimitLaw::Gumbel => gumbel_cdf(x),
            LimitLaw::Frechet => frechet_cdf(x),
            LimitLaw::Exponential { rate } => exponential_cdf(rate, x),
            LimitLaw::ChiSquare1 => chi_square1_cdf(x),
        }
    }

    /// Inverse CDF, by closed form for every kind.
    ///
    /// `p` outside `[0, 1]` yields NaN.
    pub fn quantile(&self, p: f64) -> f64 {
        if !(0.0..=1.0).contains(&p) {
            return f64::NAN;
        }
        match *self {
            LimitLaw::Rayleigh => rayleigh_quantile(p),
            LimitLaw::Gumbel => gumbel_quantile(p),
            LimitLaw::Frechet => frechet_quantile(p),
            LimitLaw::Exponential { rate } => -(-p).ln_1p() / rate,
            LimitLaw::ChiSquare1 => {
                let r = refined_erf_inv(p);
                2.0 * r * r
            }
        }
    }

    /// Draw one variate by inverting the CDF at an open-interval uniform.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random::<f64>();
        // map [0,1) onto (0,1) so the unbounded quantiles stay finite
        let u = if u == 0.0 { f64::MIN_POSITIVE } else { u };
        self.quantile(u)
    }

    pub fn name(&self) -> &'static str {
        match self {
            LimitLaw::Rayleigh => "rayleigh",
            LimitLaw::Gumbel => "gumbel",
            LimitLaw::Frechet => "frechet",
            LimitLaw::Exponential { .. } => "exponential",
            LimitLaw::ChiSquare1 => "chi-square(1)",
        }
    }
}

/// Centering and scaling sequences for dimension `n` and power `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizingConstants {
    pub n: usize,
    /// Gumbel centering `sqrt(n ln(n/2))`.
    pub a_n: f64,
    /// Gumbel scale `sqrt(n / ln(n/2)) / 2`.
    pub b_n: f64,
    /// `sqrt(2/n)`, the rescaling that turns `|lambda_k|` into unit-variance moduli.
    pub beta_n: f64,
    /// Condition-number scale `sqrt(n ln(n) / 2)`.
    pub kappa_scale: f64,
    pub p: u32,
    /// Power centering `a_n^p`.
    pub a_pow: f64,
    /// Power scale `p * sum_{j<p} a_n^j b_n^(p-j)`.
    pub b_pow: f64,
}

impl NormalizingConstants {
    /// `kappa_scale^p`, the scale of the condition number of `C^p`.
    pub fn kappa_scale_pow(&self) -> f64 {
        self.kappa_scale.powi(self.p as i32)
    }

    /// Constants of the same dimension at another power.
    pub fn with_power(&self, p: u32) -> Result<Self, LawError> {
        normalizers(self.n, p)
    }
}

/// Compute the normalizing constants for dimension `n` and power `p`.
pub fn normalizers(n: usize, p: u32) -> Result<NormalizingConstants, LawError> {
    if n < MIN_DIMENSION {
        return Err(LawError::DimensionTooSmall(n));
    }
    if p == 0 {
        return Err(LawError::ZeroPower);
    }
    let nf = n as f64;
    let log_half = (nf / 2.0).ln();
    let a_n = (nf * log_half).sqrt();
    let b_n = 0.5 * (nf / log_half).sqrt();
    let a_pow = a_n.powi(p as i32);
    let b_pow = p as f64
        * (0..p as i32)
            .map(|j| a_n.powi(j) * b_n.powi(p as i32 - j))
            .sum::<f64>();
    Ok(NormalizingConstants {
        n,
        a_n,
        b_n,
        beta_n: (2.0 / nf).sqrt(),
        kappa_scale: (0.5 * nf * nf.ln()).sqrt(),
        p,
        a_pow,
        b_pow,
    })
}

/// `p * b^p * (2^p - 1)`: the power scale with `a_n` replaced by `2 b_n`.
///
/// Agrees with [`NormalizingConstants::b_pow`] only at `p = 1`. For `p >= 2`
/// it shrinks relative to the true fluctuation scale of `sigma_max^p` by a
/// factor of order `ln(n)^(p-1)`, so it is not used for normalization.
pub fn collapsed_power_scale(b_n: f64, p: u32) -> f64 {
    p as f64 * b_n.powi(p as i32) * (2f64.powi(p as i32) - 1.0)
}

/// Limit laws of the `p`-th power statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PowerLaws {
    pub p: u32,
}

impl PowerLaws {
    /// Law of `(sigma_max^p - A_n(p)) / B_n(p)`: Gumbel for every `p`.
    pub fn max_cdf(&self, y: f64) -> f64 {
        gumbel_cdf(y)
    }

    /// Law of `sigma_min^p`: `R(x^(1/p))`.
    pub fn min_cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            rayleigh_cdf(x.powf(1.0 / self.p as f64))
        }
    }

    /// Law of `kappa^p / kappa_scale^p`: `F(z^(1/p))`.
    pub fn kappa_cdf(&self, z: f64) -> f64 {
        if z <= 0.0 {
            0.0
        } else {
            frechet_cdf(z.powf(1.0 / self.p as f64))
        }
    }

    pub fn min_quantile(&self, q: f64) -> f64 {
        rayleigh_quantile(q).powi(self.p as i32)
    }

    pub fn max_quantile(&self, q: f64) -> f64 {
        gumbel_quantile(q)
    }

    pub fn kappa_quantile(&self, q: f64) -> f64 {
        frechet_quantile(q).powi(self.p as i32)
    }

    /// Joint law of `(sigma_min^p, normalized sigma_max^p)`.
    pub fn joint_cdf(&self, x: f64, y: f64) -> f64 {
        self.min_cdf(x) * self.max_cdf(y)
    }
}

pub fn power_law_cdfs(p: u32) -> Result<PowerLaws, LawError> {
    if p == 0 {
        return Err(LawError::ZeroPower);
    }
    Ok(PowerLaws { p })
}

/// Exact `P(sigma_min <= x, sigma_max <= b_n y + a_n)` for i.i.d. standard
/// Gaussian entries at dimension `n`.
///
/// The moduli `|lambda_k|^2 / n`, `0 <= k <= floor(n/2)`, are independent:
/// chi-square(1) at `k = 0` (and at `k = n/2` for even `n`), standard
/// exponential otherwise. The remaining indices are conjugate duplicates and
/// do not change the min or the max.
pub fn gaussian_exact_joint_cdf(n: usize, x: f64, y: f64) -> Result<f64, LawError> {
    if x < 0.0 || x.is_nan() {
        return Err(LawError::NegativeArgument(x));
    }
    let consts = normalizers(n, 1)?;
    let upper = consts.b_n * y + consts.a_n;
    if upper <= 0.0 {
        return Ok(0.0);
    }
    let nf = n as f64;
    let u = upper * upper / nf;
    let v = x * x / nf;
    let half = (n / 2) as u64;

    // (P(Y <= t), P(s < Y <= t)) for each factor family
    // once x reaches the upper level the min constraint is implied by the max one
    let chi = (
        chi_square1_cdf(u),
        (chi_square1_sf(v) - chi_square1_sf(u)).max(0.0),
    );
    let exp = (-(-u).exp_m1(), ((-v).exp() - (-u).exp()).max(0.0));

    let factors: [(f64, f64, u64); 2] = if n % 2 == 1 {
        [(chi.0, chi.1, 1), (exp.0, exp.1, half)]
    } else {
        [(chi.0, chi.1, 2), (exp.0, exp.1, half - 1)]
    };
    Ok(independent_min_max_cdf(factors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rayleigh_cdf_values() {
        assert_eq!(rayleigh_cdf(0.0), 0.0);
        assert_eq!(rayleigh_cdf(-1.0), 0.0);
        assert_abs_diff_eq!(rayleigh_cdf((2.0 * 2f64.ln()).sqrt()), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn gumbel_cdf_values() {
        assert_abs_diff_eq!(gumbel_cdf(0.0), (-1f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(gumbel_cdf(f64::MAX), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(gumbel_cdf(-(2f64.ln()).ln()), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn frechet_cdf_values() {
        assert_abs_diff_eq!(frechet_cdf(1.0), (-1f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(frechet_cdf(1.0 / 2f64.ln().sqrt()), 0.5, epsilon = 1e-15);
        assert_eq!(frechet_cdf(0.0), 0.0);
    }

    #[test]
    fn joint_limit_values() {
        assert_eq!(joint_limit_cdf(0.0, 3.0), 0.0);
        let x = (2.0 * 2f64.ln()).sqrt();
        let y = -(2f64.ln()).ln();
        assert_abs_diff_eq!(joint_limit_cdf(x, y), 0.25, epsilon = 1e-15);
        assert!(joint_limit_cdf(50.0, 50.0) > 1.0 - 1e-15);
    }

    #[test]
    fn normalizers_at_four() {
        // a_4 = sqrt(4 ln 2), b_4 = sqrt(4 / ln 2) / 2
        let c = normalizers(4, 1).unwrap();
        assert_abs_diff_eq!(c.a_n, 1.665109222315395, epsilon = 1e-12);
        assert_abs_diff_eq!(c.b_n, 1.201122408786449, epsilon = 1e-12);
        assert_abs_diff_eq!(c.beta_n, 0.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(c.kappa_scale, (2.0 * 4f64.ln()).sqrt(), epsilon = 1e-15);
        assert_eq!(c.a_pow, c.a_n);
        assert_eq!(c.b_pow, c.b_n);
    }

    #[test]
    fn collapsed_scale_matches_documented_value() {
        let c = normalizers(4, 2).unwrap();
        assert_abs_diff_eq!(collapsed_power_scale(c.b_n, 2), 8.656170245333781, epsilon = 1e-9);
        // full scale 2 (b^2 + a b)
        assert_abs_diff_eq!(c.b_pow, 2.0 * (c.b_n * c.b_n + c.a_n * c.b_n), epsilon = 1e-12);
        assert_abs_diff_eq!(c.a_pow, c.a_n * c.a_n, epsilon = 1e-12);
        assert_eq!(collapsed_power_scale(c.b_n, 1), c.b_n);
    }

    #[test]
    fn normalizers_reject_small_dimension() {
        assert!(matches!(normalizers(2, 1), Err(LawError::DimensionTooSmall(2))));
        assert!(matches!(normalizers(10, 0), Err(LawError::ZeroPower)));
        assert!(normalizers(3, 1).is_ok());
    }

    #[test]
    fn constants_ratio_decreases() {
        let mut prev = f64::INFINITY;
        for n in 8..4000 {
            let c = normalizers(n, 1).unwrap();
            assert!(c.a_n > 0.0 && c.b_n > 0.0);
            let r = c.b_n / c.a_n;
            assert!(r < prev, "b/a not decreasing at n={n}");
            prev = r;
        }
    }

    #[test]
    fn power_laws_collapse_at_one() {
        let laws = power_law_cdfs(1).unwrap();
        for &t in &[-1.0, 0.0, 0.3, 1.0, 2.5, 7.0] {
            assert_eq!(laws.min_cdf(t), rayleigh_cdf(t));
            assert_eq!(laws.max_cdf(t), gumbel_cdf(t));
            assert_eq!(laws.kappa_cdf(t), frechet_cdf(t));
        }
    }

    #[test]
    fn power_laws_square_medians() {
        let laws = power_law_cdfs(2).unwrap();
        assert_abs_diff_eq!(laws.min_cdf(2.0 * 2f64.ln()), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(laws.kappa_cdf(1.0 / 2f64.ln()), 0.5, epsilon = 1e-15);
        assert_eq!(laws.min_cdf(-1.0), 0.0);
        assert_eq!(laws.kappa_cdf(0.0), 0.0);
    }

    #[test]
    fn quantiles_invert_cdfs() {
        let laws = [
            LimitLaw::Rayleigh,
            LimitLaw::Gumbel,
            LimitLaw::Frechet,
            LimitLaw::Exponential { rate: 0.5 },
            LimitLaw::ChiSquare1,
        ];
        for law in laws {
            for i in 1..200 {
                let x = match law {
                    LimitLaw::Gumbel => -2.0 + i as f64 * 0.05,
                    _ => i as f64 * 0.03,
                };
                let p = law.cdf(x);
                if !(1e-12..=1.0 - 1e-6).contains(&p) {
                    continue;
                }
                let back = law.quantile(p);
                assert!(
                    (back - x).abs() <= 1e-10 * x.abs().max(1.0),
                    "{} at {x}: {back}",
                    law.name()
                );
            }
        }
    }

    #[test]
    fn chi_square_uses_erf() {
        // P(chi2_1 <= 1) = P(|Z| <= 1)
        assert_abs_diff_eq!(chi_square1_cdf(1.0), 0.682689492137086, epsilon = 1e-14);
        assert_abs_diff_eq!(chi_square1_cdf(3.841458820694124), 0.95, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_exact_degenerate_events() {
        let c = normalizers(50, 1).unwrap();
        // max below zero is impossible
        let y_neg = -(c.a_n / c.b_n) - 0.1;
        assert_eq!(gaussian_exact_joint_cdf(50, 1.0, y_neg).unwrap(), 0.0);
        // min <= 0 has probability zero
        assert_eq!(gaussian_exact_joint_cdf(50, 0.0, 0.5).unwrap(), 0.0);
        // x beyond the upper level leaves only P(max <= upper)
        let t = c.a_n;
        let u = t * t / 50.0;
        let max_only = chi_square1_cdf(u).powi(2) * exponential_cdf(1.0, u).powi(24);
        assert_abs_diff_eq!(
            gaussian_exact_joint_cdf(50, t + 1.0, 0.0).unwrap(),
            max_only,
            epsilon = 1e-14
        );
        assert!(gaussian_exact_joint_cdf(50, -0.1, 0.0).is_err());
    }

    #[test]
    fn gaussian_exact_two_factor_case() {
        // n = 3: one chi-square(1) modulus at k=0 and one exponential at k=1,
        // checked against the generic min/max oracle on scaled CDFs
        let c = normalizers(3, 1).unwrap();
        let chi = |t: f64| chi_square1_cdf(t.max(0.0).powi(2) / 3.0);
        let exp = |t: f64| exponential_cdf(1.0, t.max(0.0).powi(2) / 3.0);
        for &x in &[0.0, 0.2, 0.9, 1.5] {
            for &y in &[-1.0, 0.0, 0.7, 2.0] {
                let upper = c.b_n * y + c.a_n;
                let expected = crate::stats::minmax_joint_oracle(&[&chi, &exp], x, upper);
                let got = gaussian_exact_joint_cdf(3, x, y).unwrap();
                assert_abs_diff_eq!(got, expected, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn gaussian_exact_monotone_and_limits() {
        for &n in &[7usize, 10, 101, 1000] {
            assert_eq!(gaussian_exact_joint_cdf(n, 0.0, 1.0).unwrap(), 0.0);
            let mut prev = 0.0;
            for i in 0..60 {
                let y = -3.0 + 0.2 * i as f64;
                let v = gaussian_exact_joint_cdf(n, 0.5, y).unwrap();
                assert!(v >= prev - 1e-15);
                prev = v;
            }
            let far = 8.0 * (n as f64).sqrt();
            assert!(gaussian_exact_joint_cdf(n, far, 1e4).unwrap() > 1.0 - 1e-12);
            let mut prev = 0.0;
            for i in 0..40 {
                let x = 0.1 * i as f64;
                let v = gaussian_exact_joint_cdf(n, x, 1.0).unwrap();
                assert!(v >= prev - 1e-15);
                prev = v;
            }
        }
    }

    #[test]
    fn gaussian_exact_does_not_underflow() {
        let v = gaussian_exact_joint_cdf(1_000_001, 1.0, 1.0).unwrap();
        assert!((v - joint_limit_cdf(1.0, 1.0)).abs() < 0.02);
    }

    #[test]
    fn gaussian_exact_converges_at_one_one() {
        let target = joint_limit_cdf(1.0, 1.0);
        let gaps: Vec<f64> = [101usize, 1001, 10001]
            .iter()
            .map(|&n| (gaussian_exact_joint_cdf(n, 1.0, 1.0).unwrap() - target).abs())
            .collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
    }
}
