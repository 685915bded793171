//! Seeded synthetic series used by the tests, the benchmarks and the CLI.

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// A generated series with its ground-truth components.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub values: Vec<f64>,
    pub trend: Vec<f64>,
    pub seasonal: Vec<f64>,
}

impl Synthetic {
    fn assemble(trend: Vec<f64>, seasonal: Vec<f64>, noise_sd: f64, seed: u64) -> Self {
        let noise = gaussian_noise(trend.len(), noise_sd, seed);
        let values = trend
            .iter()
            .zip(&seasonal)
            .zip(&noise)
            .map(|((t, s), e)| t + s + e)
            .collect();
        Self {
            values,
            trend,
            seasonal,
        }
    }
}

/// `n` draws of `N(0, sd²)`; all zeros when `sd == 0`.
pub fn gaussian_noise(n: usize, sd: f64, seed: u64) -> Vec<f64> {
    if sd == 0.0 {
        return vec![0.0; n];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sd).expect("finite standard deviation");
    (0..n).map(|_| normal.sample(&mut rng)).collect()
}

/// `amplitude · sin(2π (t + phase) / period)`.
pub fn sinusoid(n: usize, period: usize, amplitude: f64, phase: f64) -> Vec<f64> {
    (0..n)
        .map(|t| amplitude * (TAU * (t as f64 + phase) / period as f64).sin())
        .collect()
}

/// Linear trend plus a unit sinusoid plus noise.
pub fn trend_season(n: usize, period: usize, slope: f64, noise_sd: f64, seed: u64) -> Synthetic {
    let trend = (0..n).map(|t| slope * t as f64).collect();
    Synthetic::assemble(trend, sinusoid(n, period, 1.0, 0.0), noise_sd, seed)
}

/// Smooth random trend (integrated Gaussian steps) plus a two-harmonic
/// seasonal pattern plus noise.
pub fn random_stream(n: usize, period: usize, noise_sd: f64, seed: u64) -> Synthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let step = Normal::new(0.0, 0.002).expect("valid");
    let mut slope = 0.0;
    let mut level = 0.0;
    let trend = (0..n)
        .map(|_| {
            slope += step.sample(&mut rng);
            slope *= 0.995;
            level += slope;
            level
        })
        .collect();
    let a = sinusoid(n, period, 1.0, 0.0);
    let b = sinusoid(n, period, 0.3, period as f64 / 7.0);
    let seasonal = a.iter().zip(&b).map(|(x, y)| x + y).collect();
    Synthetic::assemble(trend, seasonal, noise_sd, seed)
}

/// Piecewise-constant trend with one jump of `jump` at `at`, a unit
/// sinusoid of period `period` and noise.
pub fn trend_jump(
    n: usize,
    period: usize,
    at: usize,
    jump: f64,
    noise_sd: f64,
    seed: u64,
) -> Synthetic {
    let trend = (0..n).map(|t| if t >= at { jump } else { 0.0 }).collect();
    Synthetic::assemble(trend, sinusoid(n, period, 1.0, 0.0), noise_sd, seed)
}

/// Unit sinusoid whose phase jumps forward by `shift` samples at `at`:
/// from then on `y_t` follows the pattern value of `t + shift`.
pub fn phase_shift(
    n: usize,
    period: usize,
    at: usize,
    shift: i64,
    noise_sd: f64,
    seed: u64,
) -> Synthetic {
    let base = |t: f64| (TAU * t / period as f64).sin();
    let seasonal = (0..n)
        .map(|t| {
            let phase = if t >= at {
                t as f64 + shift as f64
            } else {
                t as f64
            };
            base(phase)
        })
        .collect();
    Synthetic::assemble(vec![0.0; n], seasonal, noise_sd, seed)
}

/// Pure periodic series repeating `pattern`.
pub fn periodic(n: usize, pattern: &[f64]) -> Vec<f64> {
    (0..n).map(|t| pattern[t % pattern.len()]).collect()
}
