//! Seasonal-naive forecasts from the live decomposition state: the last
//! trend held flat plus the buffered seasonal value at the target phase.

use crate::error::{Error, Result};
use crate::online::{DecomposerState, OneShotStl, SeasonalBuffer};

/// `last_trend + v[(t + offset + i) mod T]`, where `t` is the global index
/// of the last processed point.
pub fn seasonal_naive(last_trend: f64, buffer: &SeasonalBuffer, t: u64, i: usize) -> f64 {
    last_trend + buffer.get(t + i as u64, 0)
}

/// Prediction `i ≥ 1` steps after the last processed point.
pub fn forecast_step(state: &DecomposerState, i: usize) -> Result<f64> {
    if i == 0 {
        return Err(Error::InvalidInput("forecast step must be ≥ 1".into()));
    }
    let t = state
        .t_counter()
        .checked_sub(1)
        .ok_or(Error::NotInitialized)?;
    Ok(seasonal_naive(state.last_trend(), state.seasonal(), t, i))
}

/// Predictions for steps `1..=h`.
pub fn forecast_horizon(state: &DecomposerState, h: usize) -> Result<Vec<f64>> {
    if h == 0 {
        return Err(Error::InvalidInput("forecast horizon must be ≥ 1".into()));
    }
    (1..=h).map(|i| forecast_step(state, i)).collect()
}

impl OneShotStl {
    /// [`forecast_horizon`] on the wrapped state.
    pub fn forecast(&self, h: usize) -> Result<Vec<f64>> {
        forecast_horizon(self.state().ok_or(Error::NotInitialized)?, h)
    }
}
