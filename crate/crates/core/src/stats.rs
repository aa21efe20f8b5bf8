//! Empirical CDFs, nearest-rank percentiles, and comparative gain reports.

use serde::Serialize;

use crate::error::{Result, SimError};

/// Empirical distribution of one metric for one UE class.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    values: Vec<f64>,
    metric: String,
    class_label: String,
}

impl EmpiricalCdf {
    pub fn metric(&self) -> &str {
        &self.metric
    }

    pub fn class_label(&self) -> &str {
        &self.class_label
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sorted sample values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(value, cumulative probability)` pairs; probabilities lie in (0, 1].
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let n = self.values.len() as f64;
        self.values
            .iter()
            .enumerate()
            .map(move |(i, v)| (*v, (i + 1) as f64 / n))
    }

    /// Empirical P(X <= x).
    pub fn probability_at(&self, x: f64) -> f64 {
        let count = self.values.partition_point(|v| *v <= x);
        count as f64 / self.values.len() as f64
    }
}

/// Build an empirical CDF from samples. Errors on empty input.
pub fn cdf(samples: &[f64], metric: &str, class_label: &str) -> Result<EmpiricalCdf> {
    if samples.is_empty() {
        return Err(SimError::EmptyInput(format!(
            "no samples for metric {metric}"
        )));
    }
    let mut values = samples.to_vec();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(EmpiricalCdf {
        values,
        metric: metric.to_string(),
        class_label: class_label.to_string(),
    })
}

/// Nearest-rank percentile, `p` in (0, 100).
pub fn percentile(cdf: &EmpiricalCdf, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 100.0) {
        return Err(SimError::OutOfRange(format!(
            "percentile must lie in (0, 100), got {p}"
        )));
    }
    let n = cdf.values.len();
    // Guard the ceil against representation error in p = 100*k/n inputs, so
    // exact-rank requests return the k-th order statistic.
    let rank = (((p / 100.0 * n as f64) - 1e-9).ceil() as usize).clamp(1, n);
    Ok(cdf.values[rank - 1])
}

pub fn median(cdf: &EmpiricalCdf) -> f64 {
    percentile(cdf, 50.0).expect("50 is a valid percentile")
}

pub fn mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

/// Relative gain of a candidate distribution over a baseline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainReport {
    /// Requested percentiles.
    pub percentiles: Vec<f64>,
    /// Relative gain in percent at each requested percentile; `None` marks
    /// an undefined gain (baseline percentile of zero).
    pub gains_pct: Vec<Option<f64>>,
    /// Relative gain of the sample means, same convention.
    pub mean_gain_pct: Option<f64>,
}

fn relative_gain(baseline: f64, candidate: f64) -> Option<f64> {
    if baseline == 0.0 {
        None
    } else {
        Some(100.0 * (candidate - baseline) / baseline)
    }
}

/// Compare candidate samples against baseline samples at the requested
/// percentiles. Errors on empty inputs.
pub fn gain_report(
    baseline: &[f64],
    candidate: &[f64],
    percentiles: &[f64],
) -> Result<GainReport> {
    let base_cdf = cdf(baseline, "baseline", "")?;
    let cand_cdf = cdf(candidate, "candidate", "")?;
    let gains_pct = percentiles
        .iter()
        .map(|p| {
            Ok(relative_gain(
                percentile(&base_cdf, *p)?,
                percentile(&cand_cdf, *p)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GainReport {
        percentiles: percentiles.to_vec(),
        gains_pct,
        mean_gain_pct: relative_gain(mean(baseline), mean(candidate)),
    })
}
