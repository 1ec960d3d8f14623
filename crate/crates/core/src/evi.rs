//! Extreme value index estimators built on the top order statistics of a
//! positive sample: Hill, moment, UH and mixed moment, plus `k = ⌊nˢ⌋`
//! sweeps over a grid of `s`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::metrics::CompensatedSum;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EviError {
    #[error("no observations left after dropping values <= {0}")]
    EmptyAfterFilter(f64),
    #[error("k = {k} outside the valid range 1..={max} for n = {n}")]
    KOutOfRange { k: usize, n: usize, max: usize },
    #[error("degenerate denominator (constant tail)")]
    DegenerateDenominator,
    #[error("UH statistic {0} is not positive")]
    NonpositiveUh(usize),
    #[error("sample values must be positive and finite")]
    InvalidSample,
}

/// Ascending order statistics of a positive sample.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedSample {
    values: Vec<f64>,
}

impl OrderedSample {
    /// Sorts the values; all must be positive and finite.
    pub fn new(mut values: Vec<f64>) -> Result<Self, EviError> {
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(EviError::InvalidSample);
        }
        values.sort_by(f64::total_cmp);
        Ok(OrderedSample { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `X_(n-i)` in 1-based order-statistic notation, for `0 <= i < n`.
    #[inline]
    fn top(&self, i: usize) -> f64 {
        self.values[self.values.len() - 1 - i]
    }

    fn check_k(&self, k: usize, max: usize) -> Result<(), EviError> {
        if k == 0 || k > max {
            return Err(EviError::KOutOfRange { k, n: self.len(), max });
        }
        Ok(())
    }
}

/// Keeps values strictly above `min_exclusive`, sorted ascending.
pub fn filter_sample(values: &[f64], min_exclusive: f64) -> Result<OrderedSample, EviError> {
    let kept: Vec<f64> = values.iter().copied().filter(|&v| v > min_exclusive).collect();
    if kept.is_empty() {
        return Err(EviError::EmptyAfterFilter(min_exclusive));
    }
    OrderedSample::new(kept)
}

/// First and second moments of the log-excesses over `X_(n-k)`, summed from
/// the smallest excess upward.
fn log_excess_moments(s: &OrderedSample, k: usize) -> (f64, f64) {
    let threshold = s.top(k);
    let (mut m1, mut m2) = (CompensatedSum::default(), CompensatedSum::default());
    for i in (0..k).rev() {
        let e = (s.top(i) / threshold).ln();
        m1.add(e);
        m2.add(e * e);
    }
    (m1.value() / k as f64, m2.value() / k as f64)
}

pub fn hill(s: &OrderedSample, k: usize) -> Result<f64, EviError> {
    s.check_k(k, s.len().saturating_sub(1))?;
    Ok(log_excess_moments(s, k).0)
}

pub fn moment(s: &OrderedSample, k: usize) -> Result<f64, EviError> {
    s.check_k(k, s.len().saturating_sub(1))?;
    let (h, second) = log_excess_moments(s, k);
    if second <= 0.0 {
        return Err(EviError::DegenerateDenominator);
    }
    let denom = 1.0 - h * h / second;
    if denom == 0.0 {
        return Err(EviError::DegenerateDenominator);
    }
    Ok(h + 1.0 - 0.5 / denom)
}

pub fn uh(s: &OrderedSample, k: usize) -> Result<f64, EviError> {
    s.check_k(k, s.len().saturating_sub(2))?;
    // Hill estimates for i = 1..=k+1 via running sums of the top logs.
    let mut top_log_sum = 0.0;
    let mut log_uh = Vec::with_capacity(k + 1);
    for i in 1..=k + 1 {
        top_log_sum += s.top(i - 1).ln();
        let threshold = s.top(i);
        let h = top_log_sum / i as f64 - threshold.ln();
        let u = threshold * h;
        if u.is_nan() || u <= 0.0 {
            return Err(EviError::NonpositiveUh(i));
        }
        log_uh.push(u.ln());
    }
    let mean: f64 = log_uh[..k].iter().sum::<f64>() / k as f64;
    Ok(mean - log_uh[k])
}

pub fn mixed_moment(s: &OrderedSample, k: usize) -> Result<f64, EviError> {
    s.check_k(k, s.len().saturating_sub(1))?;
    let h = log_excess_moments(s, k).0;
    let threshold = s.top(k);
    let mut ratio_sum = CompensatedSum::default();
    for i in (0..k).rev() {
        ratio_sum.add(threshold / s.top(i));
    }
    let l1 = 1.0 - ratio_sum.value() / k as f64;
    if l1 == 0.0 {
        return Err(EviError::DegenerateDenominator);
    }
    let phi = (h - l1) / (l1 * l1);
    Ok((phi - 1.0) / (1.0 + 2.0 * (phi - 1.0).min(0.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Estimator {
    Hill,
    Moment,
    Uh,
    MixedMoment,
}

impl Estimator {
    pub const ALL: [Estimator; 4] = [Estimator::Hill, Estimator::Moment, Estimator::Uh, Estimator::MixedMoment];

    pub fn estimate(self, s: &OrderedSample, k: usize) -> Result<f64, EviError> {
        match self {
            Estimator::Hill => hill(s, k),
            Estimator::Moment => moment(s, k),
            Estimator::Uh => uh(s, k),
            Estimator::MixedMoment => mixed_moment(s, k),
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::Hill => "hill",
            Estimator::Moment => "moment",
            Estimator::Uh => "uh",
            Estimator::MixedMoment => "mixed_moment",
        })
    }
}

impl FromStr for Estimator {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hill" => Ok(Estimator::Hill),
            "moment" => Ok(Estimator::Moment),
            "uh" => Ok(Estimator::Uh),
            "mixed_moment" | "mixed-moment" | "mm" => Ok(Estimator::MixedMoment),
            other => Err(format!("unknown estimator `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorResult {
    pub estimator: Estimator,
    pub s: f64,
    pub k: usize,
    pub n: usize,
    /// NaN when `invalid` is set.
    pub gamma: f64,
    pub invalid: Option<EviError>,
}

impl EstimatorResult {
    pub fn valid(&self) -> bool {
        self.invalid.is_none()
    }
}

/// `s = 0.05, 0.10, ..., 0.95`.
pub fn default_s_grid() -> Vec<f64> {
    (1..=19).map(|i| i as f64 * 0.05).collect()
}

/// `⌊nˢ⌋`.
pub fn k_for(n: usize, s: f64) -> usize {
    let x = (n as f64).powf(s);
    let nearest = x.round();
    // powf may land a hair off an exact integer power
    if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as usize
    } else {
        x.floor() as usize
    }
}

/// One row per (estimator, s) in the order given; cells whose `k` is outside
/// the estimator's range or whose statistic degenerates are marked invalid.
pub fn evi_sweep(s: &OrderedSample, estimators: &[Estimator], s_grid: &[f64]) -> Vec<EstimatorResult> {
    let n = s.len();
    let mut rows = Vec::with_capacity(estimators.len() * s_grid.len());
    for &est in estimators {
        for &sv in s_grid {
            let k = k_for(n, sv);
            let (gamma, invalid) = match est.estimate(s, k) {
                Ok(g) if g.is_finite() => (g, None),
                Ok(_) => (f64::NAN, Some(EviError::DegenerateDenominator)),
                Err(e) => (f64::NAN, Some(e)),
            };
            rows.push(EstimatorResult { estimator: est, s: sv, k, n, gamma, invalid });
        }
    }
    rows
}
