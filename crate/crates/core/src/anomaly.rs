//! Streaming n-sigma scoring over decomposition residuals.

use serde::{Deserialize, Serialize};

use crate::config::{Config, TimeSeries};
use crate::error::{Error, Result};
use crate::online::DecomposerState;

/// Cumulative residual statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NSigmaStats {
    pub count: u64,
    pub sum: f64,
    pub sum_squared: f64,
}

impl NSigmaStats {
    pub fn new() -> Self {
        Self::default()
    }

    /// Statistics of `history`, accumulated in order.
    pub fn from_history(history: &[f64]) -> Self {
        let mut s = Self::new();
        history.iter().for_each(|&r| s.push(r));
        s
    }

    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum / self.count as f64)
    }

    /// Population variance, clamped at zero.
    pub fn variance(&self) -> Option<f64> {
        self.mean()
            .map(|m| (self.sum_squared / self.count as f64 - m * m).max(0.0))
    }

    pub fn std(&self) -> Option<f64> {
        self.variance().map(f64::sqrt)
    }

    /// `|r − mean| / max(std, 1e−9·max(1, |mean|))`, or `None` before the
    /// first observation.
    pub fn score(&self, r: f64) -> Option<f64> {
        let mean = self.mean()?;
        let floor = 1e-9 * mean.abs().max(1.0);
        let std = self.std()?.max(floor);
        Some((r - mean).abs() / std)
    }

    pub fn push(&mut self, r: f64) {
        self.count += 1;
        self.sum += r;
        self.sum_squared += r * r;
    }
}

/// Scores `r` against `stats`, then folds `r` into the statistics.
/// Returns `(is_anomaly, score, updated stats)`.
pub fn nsigma_update(
    stats: NSigmaStats,
    r: f64,
    n: f64,
) -> Result<(bool, Option<f64>, NSigmaStats)> {
    if !r.is_finite() {
        return Err(Error::NonFinite {
            index: stats.count as usize,
            value: r,
        });
    }
    let score = stats.score(r);
    let is_anomaly = score.is_some_and(|s| s > n);
    let mut next = stats;
    next.push(r);
    Ok((is_anomaly, score, next))
}

/// Decomposes `series` online and scores every point. The first `t₀` points
/// feed the initialization and get score 0.
pub fn detect_stream(series: &TimeSeries, cfg: &Config) -> Result<Vec<(f64, bool)>> {
    let y = series.values();
    let t0 = cfg.init_len;
    if y.len() <= t0 {
        return Err(Error::InvalidInput(format!(
            "series of {} points is not longer than the init length {t0}",
            y.len()
        )));
    }
    let mut state = DecomposerState::initialize(&y[..t0], cfg)?;
    let mut out = vec![(0.0, false); t0];
    out.reserve(y.len() - t0);
    for &v in &y[t0..] {
        let u = state.update_detailed(v)?;
        out.push((u.score.unwrap_or(0.0), u.is_anomaly));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_point_has_no_score() {
        let (a, s, next) = nsigma_update(NSigmaStats::new(), 3.0, 5.0).unwrap();
        assert!(!a);
        assert_eq!(s, None);
        assert_eq!(next.count, 1);
    }

    #[test]
    fn direct_formula() {
        let stats = NSigmaStats::from_history(&[0.0, 2.0]);
        let (a, s, _) = nsigma_update(stats, 4.0, 5.0).unwrap();
        assert_eq!(s, Some(3.0));
        assert!(!a);
    }

    #[test]
    fn zero_deviation_under_floor() {
        let stats = NSigmaStats::from_history(&[1.0, 1.0, 1.0]);
        let (a, s, _) = nsigma_update(stats, 1.0, 5.0).unwrap();
        assert_eq!(s, Some(0.0));
        assert!(!a);
    }

    #[test]
    fn flags_beyond_threshold() {
        let stats = NSigmaStats::from_history(&[-1.0, 1.0, -1.0, 1.0]);
        let (a, s, _) = nsigma_update(stats, 6.0, 5.0).unwrap();
        assert_eq!(s, Some(6.0));
        assert!(a);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(nsigma_update(NSigmaStats::new(), f64::NAN, 5.0).is_err());
    }
}
