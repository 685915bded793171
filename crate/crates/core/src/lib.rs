//! Streaming seasonal-trend decomposition with constant work per point.

pub mod anomaly;
pub mod banded;
pub mod batch;
pub mod config;
pub mod error;
pub mod forecast;
pub mod latency;
pub mod online;
pub mod periodicity;
pub mod synth;

pub use anomaly::{detect_stream, nsigma_update, NSigmaStats};
pub use batch::{joint_stl, modified_joint_stl, BatchParams, Decomposition};
pub use config::{validate_config, Config, DecompPoint, TimeSeries, ValidatedConfig};
pub use error::{Error, Result};
pub use forecast::{forecast_horizon, forecast_step};
pub use online::{DecomposerState, OneShotStl, SeasonalBuffer, Update};
pub use periodicity::{estimate_period, tune_lambda, PeriodEstimate};
