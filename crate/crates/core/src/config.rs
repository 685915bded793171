//! Hyper-parameters and the small value types shared by every module.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default IRLS denominator floor.
pub const DEFAULT_WEIGHT_FLOOR: f64 = 1e-10;

/// Default ridge on the seasonal block of the batch system, per data point.
pub const DEFAULT_RIDGE_PER_POINT: f64 = 1e-8;

/// All hyper-parameters of the decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Config {
    /// Samples per seasonal cycle (T).
    pub period: usize,
    /// Maximum phase displacement searched when the residual trips NSigma (H).
    pub shift_window: usize,
    /// Weight of the first-difference trend penalty.
    pub lambda1: f64,
    /// Weight of the second-difference trend penalty.
    pub lambda2: f64,
    /// IRLS iterations per point (and per batch solve).
    pub max_iters: usize,
    /// Anomaly threshold in standard deviations.
    pub nsigma: f64,
    /// Number of points consumed by the batch initialization.
    pub init_len: usize,
    /// Ridge on the seasonal block of the batch system. `None` means
    /// `1e-8 * N` for a series of length `N`.
    pub ridge: Option<f64>,
    /// Floor applied to the absolute differences inside the IRLS weights.
    pub weight_floor: f64,
    /// Optional relative-change early exit for the batch IRLS loop.
    pub early_exit: Option<f64>,
}

impl Config {
    /// Defaults for a given period: H = min(20, T - 1), lambda = 1, I = 8,
    /// n = 5, init length 4T.
    pub fn new(period: usize) -> Self {
        Self {
            period,
            shift_window: 20.min(period.saturating_sub(1)),
            lambda1: 1.0,
            lambda2: 1.0,
            max_iters: 8,
            nsigma: 5.0,
            init_len: 4 * period,
            ridge: None,
            weight_floor: DEFAULT_WEIGHT_FLOOR,
            early_exit: None,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda1 = lambda;
        self.lambda2 = lambda;
        self
    }

    pub fn with_shift_window(mut self, h: usize) -> Self {
        self.shift_window = h;
        self
    }

    pub fn with_iters(mut self, iters: usize) -> Self {
        self.max_iters = iters;
        self
    }

    pub fn with_init_len(mut self, t0: usize) -> Self {
        self.init_len = t0;
        self
    }

    pub fn with_nsigma(mut self, n: f64) -> Self {
        self.nsigma = n;
        self
    }

    /// Ridge actually applied to a batch system of `n` points.
    pub fn ridge_for(&self, n: usize) -> f64 {
        self.ridge.unwrap_or(DEFAULT_RIDGE_PER_POINT * n as f64)
    }

    pub fn validate(self) -> Result<ValidatedConfig> {
        validate_config(self)
    }
}

/// A [`Config`] whose invariants have been checked.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Config", into = "Config")]
pub struct ValidatedConfig(Config);

impl ValidatedConfig {
    pub fn into_inner(self) -> Config {
        self.0
    }
}

impl Deref for ValidatedConfig {
    type Target = Config;

    fn deref(&self) -> &Config {
        &self.0
    }
}

impl TryFrom<Config> for ValidatedConfig {
    type Error = Error;

    fn try_from(cfg: Config) -> Result<Self> {
        validate_config(cfg)
    }
}

impl From<ValidatedConfig> for Config {
    fn from(v: ValidatedConfig) -> Config {
        v.0
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

/// Checks every invariant of `cfg` and returns it unchanged on success.
pub fn validate_config(cfg: Config) -> Result<ValidatedConfig> {
    if cfg.period < 2 {
        return Err(invalid("T ≥ 2"));
    }
    if cfg.shift_window >= cfg.period {
        return Err(invalid("H must be < T"));
    }
    if cfg.max_iters < 1 {
        return Err(invalid("I ≥ 1"));
    }
    if cfg.init_len < 2 * cfg.period {
        return Err(invalid("t₀ ≥ 2T"));
    }
    if !(cfg.lambda1.is_finite() && cfg.lambda1 >= 0.0) {
        return Err(invalid("λ₁ must be finite and ≥ 0"));
    }
    if !(cfg.lambda2.is_finite() && cfg.lambda2 >= 0.0) {
        return Err(invalid("λ₂ must be finite and ≥ 0"));
    }
    if cfg.lambda1 == 0.0 && cfg.lambda2 == 0.0 {
        return Err(invalid("λ₁ and λ₂ must not both be zero"));
    }
    if !(cfg.nsigma.is_finite() && cfg.nsigma > 0.0) {
        return Err(invalid("n must be > 0"));
    }
    if !(cfg.weight_floor.is_finite() && cfg.weight_floor > 0.0) {
        return Err(invalid("weight floor must be > 0"));
    }
    if let Some(r) = cfg.ridge {
        if !(r.is_finite() && r >= 0.0) {
            return Err(invalid("ridge must be ≥ 0"));
        }
    }
    if let Some(tol) = cfg.early_exit {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(invalid("early-exit tolerance must be > 0"));
        }
    }
    if cfg.init_len < 4 * cfg.period {
        log::warn!(
            "init length {} is shorter than the recommended 4T = {}",
            cfg.init_len,
            4 * cfg.period
        );
    }
    Ok(ValidatedConfig(cfg))
}

/// Decomposition of one observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompPoint {
    pub trend: f64,
    pub seasonal: f64,
    pub residual: f64,
    /// Phase adjustment selected for this point (0 when none).
    pub shift: i64,
}

impl DecompPoint {
    /// Builds a point whose residual closes the identity
    /// `(trend + seasonal) + residual == value` in floating point whenever a
    /// representable residual exists (always, unless the components dwarf
    /// the value by many orders of magnitude).
    pub fn from_components(value: f64, trend: f64, seasonal: f64, shift: i64) -> Self {
        Self {
            trend,
            seasonal,
            residual: exact_residual(value, trend + seasonal),
            shift,
        }
    }

    /// `(trend + seasonal) + residual`.
    pub fn value(&self) -> f64 {
        (self.trend + self.seasonal) + self.residual
    }
}

pub(crate) fn exact_residual(value: f64, fitted: f64) -> f64 {
    let mut r = value - fitted;
    if !r.is_finite() || fitted + r == value {
        return r;
    }
    // Walk a few ulps toward the value that reconstructs exactly.
    for _ in 0..4 {
        let sum = fitted + r;
        if sum == value {
            break;
        }
        r = if sum < value {
            r.next_up()
        } else {
            r.next_down()
        };
    }
    r
}

/// A finite-valued series with optional strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    timestamps: Option<Vec<i64>>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("empty series".into()));
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self {
            values,
            timestamps: None,
        })
    }

    pub fn with_timestamps(values: Vec<f64>, timestamps: Vec<i64>) -> Result<Self> {
        let mut ts = Self::new(values)?;
        if timestamps.len() != ts.values.len() {
            return Err(Error::DimensionMismatch {
                expected: ts.values.len(),
                got: timestamps.len(),
            });
        }
        if timestamps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "timestamps must be strictly increasing".into(),
            ));
        }
        ts.timestamps = Some(timestamps);
        Ok(ts)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn timestamps(&self) -> Option<&[i64]> {
        self.timestamps.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}
