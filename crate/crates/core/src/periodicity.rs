//! Period detection from the autocorrelation function and grid tuning of
//! the trend smoothness.

use serde::{Deserialize, Serialize};

use crate::batch::{joint_stl, BatchParams};
use crate::config::Config;
use crate::error::{Error, Result};

/// Minimum autocorrelation accepted as a seasonal peak.
pub const ACF_THRESHOLD: f64 = 0.1;

/// Smoothness values searched by [`tune_lambda`] when none are given.
pub const DEFAULT_LAMBDA_GRID: [f64; 5] = [1.0, 10.0, 100.0, 1000.0, 10000.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodEstimate {
    pub period: usize,
    /// Autocorrelation at `period`.
    pub acf_peak: f64,
}

/// Biased sample autocorrelation of the mean-removed series for lags
/// `0..=max_lag`. `None` when the series has zero variance.
pub fn autocorrelation(y: &[f64], max_lag: usize) -> Option<Vec<f64>> {
    let n = y.len();
    if n == 0 || max_lag >= n {
        return None;
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let c0: f64 = centered.iter().map(|v| v * v).sum();
    if c0 <= n as f64 * (1e-12 * mean.abs().max(1.0)).powi(2) {
        return None;
    }
    Some(
        (0..=max_lag)
            .map(|k| {
                centered[..n - k]
                    .iter()
                    .zip(&centered[k..])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    / c0
            })
            .collect(),
    )
}

/// Lag in `[min_lag, max_lag]` of the highest strict local ACF maximum above
/// [`ACF_THRESHOLD`]; ties go to the shorter lag.
pub fn estimate_period(y: &[f64], min_lag: usize, max_lag: usize) -> Result<PeriodEstimate> {
    let n = y.len();
    if min_lag < 2 || min_lag >= max_lag || max_lag > n / 2 || n < 4 * min_lag {
        return Err(Error::InvalidInput(format!(
            "need 2 ≤ min_lag < max_lag ≤ N/2 and N ≥ 4·min_lag (N = {n}, lags {min_lag}..{max_lag})"
        )));
    }
    let acf = autocorrelation(y, max_lag + 1).ok_or(Error::NoPeriod)?;
    let mut best: Option<PeriodEstimate> = None;
    for lag in min_lag..=max_lag {
        let r = acf[lag];
        if r > ACF_THRESHOLD
            && r > acf[lag - 1]
            && r > acf[lag + 1]
            && best.is_none_or(|b| r > b.acf_peak)
        {
            best = Some(PeriodEstimate {
                period: lag,
                acf_peak: r,
            });
        }
    }
    best.ok_or(Error::NoPeriod)
}

/// Centered moving average of window `period` (a 2×`period` average for
/// even periods). Edges where the window does not fit are `None`.
pub fn classical_trend(y: &[f64], period: usize) -> Vec<Option<f64>> {
    let n = y.len();
    let half = period / 2;
    (0..n)
        .map(|t| {
            if t < half || t + half >= n {
                return None;
            }
            let window = &y[t - half..=t + half];
            Some(if period % 2 == 1 {
                window.iter().sum::<f64>() / period as f64
            } else {
                let inner: f64 = window[1..period].iter().sum();
                (inner + 0.5 * (window[0] + window[period])) / period as f64
            })
        })
        .collect()
}

/// Classical decomposition: moving-average trend and the per-phase mean of
/// the detrended series, centered to zero mean.
pub fn classical_decomposition(y: &[f64], period: usize) -> (Vec<Option<f64>>, Vec<f64>) {
    let trend = classical_trend(y, period);
    let mut sums = vec![0.0; period];
    let mut counts = vec![0usize; period];
    for (t, tr) in trend.iter().enumerate() {
        if let Some(tr) = tr {
            sums[t % period] += y[t] - tr;
            counts[t % period] += 1;
        }
    }
    let mut pattern: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let mean = pattern.iter().sum::<f64>() / period as f64;
    pattern.iter_mut().for_each(|v| *v -= mean);
    let seasonal = (0..y.len()).map(|t| pattern[t % period]).collect();
    (trend, seasonal)
}

/// Picks the grid value whose batch trend is closest (mean absolute error)
/// to the classical moving-average trend. Returns `(λ, mae)`.
pub fn tune_lambda(y_train: &[f64], period: usize, grid: &[f64]) -> Result<(f64, f64)> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty λ grid".into()));
    }
    if let Some(bad) = grid.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "λ grid value {bad} is not positive"
        )));
    }
    if period < 2 || y_train.len() < 2 * period {
        return Err(Error::InvalidInput(format!(
            "tuning needs at least 2T points (N = {}, T = {period})",
            y_train.len()
        )));
    }
    let reference = classical_trend(y_train, period);
    let mut order = grid.to_vec();
    order.sort_by(|a, b| b.total_cmp(a));
    order.dedup();
    let mut best: Option<(f64, f64)> = None;
    let mut last_err = None;
    for lambda in order {
        let cfg = Config::new(period).with_lambda(lambda);
        let fit = match joint_stl(y_train, &BatchParams::from_config(&cfg, y_train.len())) {
            Ok(fit) => fit,
            Err(e) => {
                log::warn!("λ = {lambda} skipped: {e}");
                last_err = Some(e);
                continue;
            }
        };
        let (sum, count) = reference
            .iter()
            .zip(&fit.trend)
            .filter_map(|(r, t)| r.map(|r| (r - t).abs()))
            .fold((0.0, 0usize), |(s, c), e| (s + e, c + 1));
        let mae = sum / count.max(1) as f64;
        log::debug!("λ = {lambda}: trend MAE {mae:e}");
        if best.is_none_or(|(_, m)| mae < m) {
            best = Some((lambda, mae));
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(Error::SolverFailure("no λ succeeded".into())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alternating_series_has_period_two() {
        let y: Vec<f64> = (0..40)
            .map(|t| if t % 2 == 0 { 1.0 } else { 2.0 })
            .collect();
        assert_eq!(estimate_period(&y, 2, 10).unwrap().period, 2);
    }

    #[test]
    fn constant_series_has_no_period() {
        assert_eq!(estimate_period(&[3.0; 100], 2, 50), Err(Error::NoPeriod));
    }

    #[test]
    fn rejects_bad_lag_range() {
        assert!(estimate_period(&[0.0; 100], 1, 10).is_err());
        assert!(estimate_period(&[0.0; 100], 10, 10).is_err());
        assert!(estimate_period(&[0.0; 100], 10, 51).is_err());
    }

    #[test]
    fn moving_average_of_even_period() {
        let y = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let tr = classical_trend(&y, 4);
        assert_eq!(tr[1], None);
        assert_eq!(tr[2], Some(2.0));
        assert_eq!(tr[4], Some(4.0));
        assert_eq!(tr[5], None);
    }

    #[test]
    fn singleton_grid() {
        let y: Vec<f64> = (0..60)
            .map(|t| (t as f64 * 0.7).sin() + 0.01 * t as f64)
            .collect();
        let (lambda, mae) = tune_lambda(&y, 9, &[100.0]).unwrap();
        assert_eq!(lambda, 100.0);
        assert!(mae.is_finite());
    }
}
