//! Empirical distributions and goodness-of-fit measures.

use std::fmt;

use crate::StatsError;

/// Where a sample came from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleProvenance {
    pub distribution: String,
    pub delta: f64,
    pub seed: u64,
    pub flags: Vec<String>,
}

/// One statistic observed across replications, sorted ascending.
///
/// Replications whose statistic was undefined (a condition number with
/// `sigma_min = 0`) are tallied in `undefined_count` rather than stored.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSample {
    values: Vec<f64>,
    pub n: usize,
    pub undefined_count: usize,
    pub provenance: SampleProvenance,
}

impl EmpiricalSample {
    pub fn new(
        mut values: Vec<f64>,
        undefined_count: usize,
        n: usize,
        provenance: SampleProvenance,
    ) -> Result<Self, StatsError> {
        if values.iter().any(|v| v.is_nan()) {
            return Err(StatsError::NanValue);
        }
        values.sort_by(f64::total_cmp);
        Ok(Self {
            values,
            n,
            undefined_count,
            provenance,
        })
    }

    /// Sample without provenance, mostly for tests and ad-hoc checks.
    pub fn from_values(values: Vec<f64>) -> Result<Self, StatsError> {
        Self::new(values, 0, 0, SampleProvenance::default())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Stored values plus the undefined tally.
    pub fn replications(&self) -> usize {
        self.values.len() + self.undefined_count
    }

    /// Merge two samples of the same statistic. The result does not depend
    /// on the order of the arguments.
    pub fn merge(&self, other: &EmpiricalSample) -> EmpiricalSample {
        let mut values = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.values, &other.values);
        while i < a.len() && j < b.len() {
            if a[i].total_cmp(&b[j]).is_le() {
                values.push(a[i]);
                i += 1;
            } else {
                values.push(b[j]);
                j += 1;
            }
        }
        values.extend_from_slice(&a[i..]);
        values.extend_from_slice(&b[j..]);
        EmpiricalSample {
            values,
            n: self.n,
            undefined_count: self.undefined_count + other.undefined_count,
            provenance: self.provenance.clone(),
        }
    }

    /// Empirical quantile by the inverse of the step ECDF.
    pub fn quantile(&self, q: f64) -> Option<f64> {
        if self.values.is_empty() || !(0.0..=1.0).contains(&q) {
            return None;
        }
        let n = self.values.len();
        let idx = ((q * n as f64).ceil() as usize).clamp(1, n) - 1;
        Some(self.values[idx])
    }

    pub fn mean(&self) -> Option<f64> {
        if self.values.is_empty() {
            return None;
        }
        Some(self.values.iter().sum::<f64>() / self.values.len() as f64)
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> Option<f64> {
        let m = self.mean()?;
        let n = self.values.len();
        if n < 2 {
            return None;
        }
        Some(self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64)
    }
}

/// Fraction of sample values `<= x`.
pub fn empirical_cdf(sample: &EmpiricalSample, x: f64) -> Result<f64, StatsError> {
    if sample.is_empty() {
        return Err(StatsError::EmptySample);
    }
    Ok(ecdf_sorted(sample.values(), x))
}

fn ecdf_sorted(sorted: &[f64], x: f64) -> f64 {
    sorted.partition_point(|&v| v <= x) as f64 / sorted.len() as f64
}

/// Kolmogorov–Smirnov distance `sup_x |F_N(x) - F(x)|`.
///
/// The supremum is attained at a jump of the ECDF, so both one-sided limits
/// are checked at every order statistic. Ties are handled by evaluating each
/// distinct value once with the ECDF level before and after its block.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &EmpiricalSample, cdf: F) -> f64 {
    let v = sample.values();
    let n = v.len();
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < n {
        let x = v[i];
        let mut j = i;
        while j < n && v[j] == x {
            j += 1;
        }
        let f = cdf(x);
        d = d.max(j as f64 / nf - f).max(f - i as f64 / nf);
        i = j;
    }
    d.clamp(0.0, 1.0)
}

/// Asymptotic 95% Kolmogorov critical value `1.36 / sqrt(N)`.
pub fn ks_critical_95(sample_size: usize) -> f64 {
    1.36 / (sample_size as f64).sqrt()
}

/// Asymptotic 99% Kolmogorov critical value `1.63 / sqrt(N)`.
pub fn ks_critical_99(sample_size: usize) -> f64 {
    1.63 / (sample_size as f64).sqrt()
}

/// One grid point of a bivariate comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub x: f64,
    pub y: f64,
    pub empirical: f64,
    pub theoretical: f64,
    pub gap: f64,
    /// Per-point tolerance when the check is pointwise.
    pub tolerance: Option<f64>,
}

/// Outcome of one goodness-of-fit check.
#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub statistic_name: String,
    pub ks_distance: f64,
    pub sample_size: usize,
    pub threshold: f64,
    pub pass: bool,
    pub grid_details: Option<Vec<GridPoint>>,
}

impl TestReport {
    pub fn new(name: impl Into<String>, distance: f64, sample_size: usize, threshold: f64) -> Self {
        Self {
            statistic_name: name.into(),
            ks_distance: distance,
            sample_size,
            threshold,
            pass: distance <= threshold,
            grid_details: None,
        }
    }

    pub fn with_grid(mut self, grid: Vec<GridPoint>) -> Self {
        self.grid_details = Some(grid);
        self
    }
}

impl fmt::Display for TestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} distance={:.6} threshold={:.6} N={}",
            if self.pass { "PASS" } else { "FAIL" },
            self.statistic_name,
            self.ks_distance,
            self.threshold,
            self.sample_size
        )
    }
}

/// Tensor grid of theoretical quantiles at levels `(2i - 1) / (2 size)`.
///
/// `size = 5` gives the levels 0.1, 0.3, 0.5, 0.7, 0.9.
pub fn quantile_levels(size: usize) -> Vec<f64> {
    (1..=size)
        .map(|i| (2 * i - 1) as f64 / (2 * size) as f64)
        .collect()
}

pub fn quantile_grid<FX, FY>(size: usize, x_quantile: FX, y_quantile: FY) -> Vec<(f64, f64)>
where
    FX: Fn(f64) -> f64,
    FY: Fn(f64) -> f64,
{
    let levels = quantile_levels(size);
    let mut grid = Vec::with_capacity(size * size);
    for &qx in &levels {
        for &qy in &levels {
            grid.push((x_quantile(qx), y_quantile(qy)));
        }
    }
    grid
}

/// Empirical joint CDF of paired observations on a grid.
pub fn joint_ecdf(min_values: &[f64], max_values: &[f64], x: f64, y: f64) -> f64 {
    let hits = min_values
        .iter()
        .zip(max_values)
        .filter(|(&m, &mx)| m <= x && mx <= y)
        .count();
    hits as f64 / min_values.len() as f64
}

/// Joint-law and independence discrepancies of a paired sample.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDiscrepancy {
    /// `sup |F_joint - theoretical(x, y)|`.
    pub joint: TestReport,
    /// `sup |F_joint - F_min(x) F_max(y)|`.
    pub independence: TestReport,
}

/// Compare a paired `(min, max)` sample against a product law on a grid.
///
/// `min_values[r]` and `max_values[r]` must come from the same replication.
pub fn joint_discrepancy<T>(
    min_values: &[f64],
    max_values: &[f64],
    grid: &[(f64, f64)],
    theoretical: T,
    joint_threshold: f64,
    independence_threshold: f64,
) -> Result<JointDiscrepancy, StatsError>
where
    T: Fn(f64, f64) -> f64,
{
    if min_values.len() != max_values.len() {
        return Err(StatsError::Unpaired {
            left: min_values.len(),
            right: max_values.len(),
        });
    }
    if min_values.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let mut sorted_min = min_values.to_vec();
    sorted_min.sort_by(f64::total_cmp);
    let mut sorted_max = max_values.to_vec();
    sorted_max.sort_by(f64::total_cmp);

    let mut joint_grid = Vec::with_capacity(grid.len());
    let mut indep_grid = Vec::with_capacity(grid.len());
    let (mut joint_sup, mut indep_sup) = (0.0f64, 0.0f64);
    for &(x, y) in grid {
        let fj = joint_ecdf(min_values, max_values, x, y);
        let theory = theoretical(x, y);
        let product = ecdf_sorted(&sorted_min, x) * ecdf_sorted(&sorted_max, y);
        let (g1, g2) = ((fj - theory).abs(), (fj - product).abs());
        joint_sup = joint_sup.max(g1);
        indep_sup = indep_sup.max(g2);
        joint_grid.push(GridPoint {
            x,
            y,
            empirical: fj,
            theoretical: theory,
            gap: g1,
            tolerance: None,
        });
        indep_grid.push(GridPoint {
            x,
            y,
            empirical: fj,
            theoretical: product,
            gap: g2,
            tolerance: None,
        });
    }
    let n = min_values.len();
    Ok(JointDiscrepancy {
        joint: TestReport::new("joint", joint_sup, n, joint_threshold).with_grid(joint_grid),
        independence: TestReport::new("independence", indep_sup, n, independence_threshold)
            .with_grid(indep_grid),
    })
}

/// `P(min <= s, max <= t)` for independent variables grouped into families.
///
/// Each entry is `(P(Y <= t), P(s < Y <= t), multiplicity)`. Products are
/// accumulated in log space so that multiplicities in the millions neither
/// underflow nor lose relative precision.
pub fn independent_min_max_cdf<I>(factors: I) -> f64
where
    I: IntoIterator<Item = (f64, f64, u64)>,
{
    let mut log_all = 0.0f64;
    let mut log_between = 0.0f64;
    for (le_t, between, mult) in factors {
        if mult == 0 {
            continue;
        }
        let m = mult as f64;
        log_all += m * le_t.max(0.0).ln();
        log_between += m * between.max(0.0).ln();
    }
    (log_all.exp() - log_between.exp()).max(0.0)
}

/// Joint CDF of `(min, max)` for independent variables given by their CDFs.
///
/// Returns `prod_j P(Y_j <= t) - prod_j P(s < Y_j <= t)`; the second
/// product vanishes when `s >= t`.
pub fn minmax_joint_oracle(cdfs: &[&dyn Fn(f64) -> f64], s: f64, t: f64) -> f64 {
    independent_min_max_cdf(cdfs.iter().map(|cdf| {
        let at_t = cdf(t);
        let between = if s < t { at_t - cdf(s) } else { 0.0 };
        (at_t, between, 1)
    }))
}

/// Bonferroni lower and upper bounds on `P(A_1 u ... u A_m)` at depth `ell`.
///
/// `s_sums[j - 1]` holds `S_j`, the sum of `j`-fold intersection
/// probabilities; at least `2 ell` of them are required.
pub fn bonferroni_bounds(s_sums: &[f64], ell: usize) -> Result<(f64, f64), StatsError> {
    if ell < 1 {
        return Err(StatsError::BonferroniDepth(ell));
    }
    if s_sums.len() < 2 * ell {
        return Err(StatsError::MissingOrders {
            needed: 2 * ell,
            got: s_sums.len(),
        });
    }
    let alt = |k: usize| -> f64 {
        s_sums[..k]
            .iter()
            .enumerate()
            .map(|(j, s)| if j % 2 == 0 { *s } else { -*s })
            .sum()
    };
    Ok((alt(2 * ell), alt(2 * ell - 1)))
}

/// `S_j` sums for independent events with the given probabilities, `j = 1..=m`.
pub fn intersection_sums_independent(probs: &[f64]) -> Vec<f64> {
    // elementary symmetric polynomials e_1..e_m
    let m = probs.len();
    let mut e = vec![0.0; m + 1];
    e[0] = 1.0;
    for &p in probs {
        for j in (1..=m).rev() {
            e[j] += e[j - 1] * p;
        }
    }
    e.split_off(1)
}
