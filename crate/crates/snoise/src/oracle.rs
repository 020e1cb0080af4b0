//! Monte Carlo oracles: empirical characteristic functions, a windowed
//! martingale drift test and Kolmogorov-Smirnov tests.
//!
//! Comparisons against Monte Carlo use a 3 standard error tolerance and
//! always report the ratio `|Δ| / SE`.

use num_complex::Complex64;
use snoise_core::rng::{normal_cdf, normal_quantile};
use snoise_core::stats::Estimate;

use crate::{Error, Result};

/// Tolerance, in standard errors, for every Monte Carlo comparison.
pub const SE_TOLERANCE: f64 = 3.0;

/// Asymptotic Kolmogorov critical value at the 1% level.
pub const KS_CRITICAL_1PCT: f64 = 1.628;

pub const MIN_CF_PATHS: usize = 100;
pub const MIN_DRIFT_PATHS: usize = 1000;

/// Mean of `e^{iθS}` with componentwise standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfEstimate {
    pub theta: f64,
    pub value: Complex64,
    pub se_re: f64,
    pub se_im: f64,
    pub n: usize,
}

impl CfEstimate {
    /// Standard error of the complex mean, `sqrt(se_re² + se_im²)`.
    pub fn se(&self) -> f64 {
        self.se_re.hypot(self.se_im)
    }
}

pub fn empirical_cf(values: &[f64], theta: f64) -> Result<CfEstimate> {
    if values.len() < MIN_CF_PATHS {
        return Err(Error::TooFewPaths {
            need: MIN_CF_PATHS,
            got: values.len(),
        });
    }
    let re = Estimate::from_samples(values.iter().map(|s| (theta * s).cos()));
    let im = Estimate::from_samples(values.iter().map(|s| (theta * s).sin()));
    Ok(CfEstimate {
        theta,
        value: Complex64::new(re.mean, im.mean),
        se_re: re.std_error,
        se_im: im.std_error,
        n: values.len(),
    })
}

/// A reference value against an estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfComparison {
    pub theta: f64,
    pub reference: Complex64,
    pub estimate: CfEstimate,
    pub delta: f64,
    /// `|Δ| / SE`; zero when both vanish, infinite when only SE does.
    pub ratio: f64,
}

impl CfComparison {
    pub fn passes(&self) -> bool {
        self.ratio <= SE_TOLERANCE
    }
}

pub fn compare_cf(reference: Complex64, estimate: CfEstimate) -> CfComparison {
    let delta = (reference - estimate.value).norm();
    CfComparison {
        theta: estimate.theta,
        reference,
        estimate,
        delta,
        ratio: ratio(delta, estimate.se()),
    }
}

/// `|Δ| / SE` with `0/0 = 0`.
pub fn ratio(delta: f64, se: f64) -> f64 {
    if delta == 0.0 {
        0.0
    } else {
        delta.abs() / se
    }
}

/// `|a - b|` in units of the combined standard error.
pub fn two_sample_ratio(a: &Estimate, b: &Estimate) -> f64 {
    ratio(a.mean - b.mean, a.std_error.hypot(b.std_error))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftWindow {
    pub t0: f64,
    pub t1: f64,
    pub increment: Estimate,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftReport {
    pub windows: Vec<DriftWindow>,
    /// Bonferroni-adjusted two-sided threshold on `|z|`.
    pub threshold: f64,
    pub max_abs_z: f64,
    pub pass: bool,
}

/// Familywise two-sided level matching a single 3 SE test.
pub fn familywise_alpha() -> f64 {
    2.0 * (1.0 - normal_cdf(SE_TOLERANCE))
}

/// `Φ^{-1}(1 - α/(2m))`; exactly 3 for one window.
pub fn bonferroni_threshold(windows: usize) -> f64 {
    if windows <= 1 {
        return SE_TOLERANCE;
    }
    normal_quantile(1.0 - familywise_alpha() / (2.0 * windows as f64))
}

/// Tests that the mean increment of the paths over each window
/// `[times[k], times[k+1]]` vanishes. `paths[i][k]` is path `i` at `times[k]`.
pub fn martingale_drift_test(paths: &[Vec<f64>], times: &[f64]) -> Result<DriftReport> {
    if paths.len() < MIN_DRIFT_PATHS {
        return Err(Error::TooFewPaths {
            need: MIN_DRIFT_PATHS,
            got: paths.len(),
        });
    }
    if times.len() < 2 || paths.iter().any(|p| p.len() != times.len()) {
        return Err(Error::InvalidInput(
            "every path needs one value per grid time, with at least two times",
        ));
    }
    let threshold = bonferroni_threshold(times.len() - 1);
    let windows: Vec<DriftWindow> = (0..times.len() - 1)
        .map(|k| {
            let increment = Estimate::from_samples(paths.iter().map(|p| p[k + 1] - p[k]));
            DriftWindow {
                t0: times[k],
                t1: times[k + 1],
                z: increment.z_score(0.0),
                increment,
            }
        })
        .collect();
    let max_abs_z = windows.iter().map(|w| w.z).fold(0.0, f64::max);
    Ok(DriftReport {
        pass: max_abs_z <= threshold,
        windows,
        threshold,
        max_abs_z,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    /// Sup distance between the distribution functions.
    pub statistic: f64,
    /// Effective sample size entering the scaling.
    pub n_eff: f64,
    /// `statistic · sqrt(n_eff)`, compared with the critical value.
    pub scaled: f64,
    pub critical: f64,
    pub pass: bool,
}

impl KsResult {
    fn new(statistic: f64, n_eff: f64) -> Self {
        let scaled = statistic * n_eff.sqrt();
        Self {
            statistic,
            n_eff,
            scaled,
            critical: KS_CRITICAL_1PCT,
            pass: scaled <= KS_CRITICAL_1PCT,
        }
    }
}

pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("empty sample"));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < s.len() {
        let x = s[i];
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        while i < s.len() && s[i] == x {
            i += 1;
        }
        d = d.max((i as f64 / n - f).abs());
    }
    Ok(KsResult::new(d, n))
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    ks_two_sample_weighted(a, &vec![1.0; a.len()], b, &vec![1.0; b.len()])
}

/// Two-sample test between weighted empirical laws. Each side enters the
/// scaling through its effective size `(Σw)² / Σw²`.
pub fn ks_two_sample_weighted(a: &[f64], wa: &[f64], b: &[f64], wb: &[f64]) -> Result<KsResult> {
    let sa = sorted_weighted(a, wa)?;
    let sb = sorted_weighted(b, wb)?;
    let (ta, tb) = (total(&sa), total(&sb));
    let (na, nb) = (n_eff(&sa), n_eff(&sb));
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb) = (0.0, 0.0);
    let mut d: f64 = 0.0;
    while i < sa.len() || j < sb.len() {
        let x = match (sa.get(i), sb.get(j)) {
            (Some(p), Some(q)) => p.0.min(q.0),
            (Some(p), None) => p.0,
            (None, Some(q)) => q.0,
            (None, None) => unreachable!(),
        };
        while i < sa.len() && sa[i].0 == x {
            fa += sa[i].1;
            i += 1;
        }
        while j < sb.len() && sb[j].0 == x {
            fb += sb[j].1;
            j += 1;
        }
        d = d.max((fa / ta - fb / tb).abs());
    }
    Ok(KsResult::new(d, na * nb / (na + nb)))
}

/// Effective sample size of a set of weights.
pub fn effective_size(w: &[f64]) -> f64 {
    let s: f64 = w.iter().sum();
    let s2: f64 = w.iter().map(|x| x * x).sum();
    s * s / s2
}

fn sorted_weighted(x: &[f64], w: &[f64]) -> Result<Vec<(f64, f64)>> {
    if x.len() != w.len() {
        return Err(Error::InvalidInput("sample and weights differ in length"));
    }
    if w.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(Error::InvalidInput("weights must be finite and non-negative"));
    }
    let mut v: Vec<(f64, f64)> = x.iter().copied().zip(w.iter().copied()).filter(|p| p.1 > 0.0).collect();
    if v.is_empty() {
        return Err(Error::InvalidInput("sample has no positive weight"));
    }
    v.sort_by(|p, q| p.0.total_cmp(&q.0));
    Ok(v)
}

fn total(v: &[(f64, f64)]) -> f64 {
    v.iter().map(|p| p.1).sum()
}

fn n_eff(v: &[(f64, f64)]) -> f64 {
    let w: Vec<f64> = v.iter().map(|p| p.1).collect();
    effective_size(&w)
}
