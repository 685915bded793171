//! Per-point latency measurement of the streaming engine across periods.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::batch::ModifiedJointStl;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::online::DecomposerState;
use crate::synth::random_stream;

/// Periods of the default scaling sweep.
pub const DEFAULT_PERIODS: [usize; 8] = [100, 200, 400, 800, 1600, 3200, 6400, 12800];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub periods: Vec<usize>,
    /// Streamed points per period (after initialization).
    pub points: usize,
    /// Leading fraction of the streamed points excluded from the statistics.
    pub warmup: f64,
    pub lambda: f64,
    pub iters: usize,
    pub shift_window: usize,
    pub noise: f64,
    pub seed: u64,
    /// Time the full-rebuild reference instead of the online engine.
    pub oracle: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            periods: DEFAULT_PERIODS.to_vec(),
            points: 200_000,
            warmup: 0.05,
            lambda: 1.0,
            iters: 8,
            shift_window: 20,
            noise: 0.1,
            seed: 42,
            oracle: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub period: usize,
    pub points: usize,
    pub mean_us: f64,
    pub median_us: f64,
    pub p99_us: f64,
    /// Mean over the first and last tenth of the measured points.
    pub first_decile_us: f64,
    pub last_decile_us: f64,
    /// Operation count of an update without the phase-shift search.
    pub ops_per_point: u64,
    /// Whether every such update used the same operation count.
    pub ops_constant: bool,
    /// Updates that ran the phase-shift search.
    pub searches: usize,
}

impl BenchRow {
    pub fn points_per_sec(&self) -> f64 {
        1e6 / self.mean_us
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub oracle: bool,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub const CSV_HEADER: &'static str =
        "period,points,mean_us,median_us,p99_us,first_decile_us,last_decile_us,ops_per_point,ops_constant,searches";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.period,
                r.points,
                r.mean_us,
                r.median_us,
                r.p99_us,
                r.first_decile_us,
                r.last_decile_us,
                r.ops_per_point,
                r.ops_constant,
                r.searches
            ));
        }
        out
    }

    /// Largest over smallest mean latency across periods.
    pub fn flatness(&self) -> f64 {
        let means = self.rows.iter().map(|r| r.mean_us);
        let max = means.clone().fold(f64::MIN, f64::max);
        let min = means.fold(f64::MAX, f64::min);
        max / min
    }
}

fn summarize(period: usize, mut lat: Vec<f64>, ops: &[u64], searches: usize) -> BenchRow {
    let n = lat.len();
    let tenth = (n / 10).max(1);
    let mean_of = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let first_decile_us = mean_of(&lat[..tenth]);
    let last_decile_us = mean_of(&lat[n - tenth..]);
    let mean_us = mean_of(&lat);
    lat.sort_by(f64::total_cmp);
    let ops_per_point = ops.iter().copied().max().unwrap_or(0);
    BenchRow {
        period,
        points: n,
        mean_us,
        median_us: lat[n / 2],
        p99_us: lat[((n as f64 * 0.99) as usize).min(n - 1)],
        first_decile_us,
        last_decile_us,
        ops_per_point,
        ops_constant: ops.iter().all(|&o| o == ops_per_point),
        searches,
    }
}

/// Streams a synthetic series for one period and times every update.
pub fn bench_period(cfg: &BenchConfig, period: usize) -> Result<BenchRow> {
    if cfg.points == 0 || !(0.0..1.0).contains(&cfg.warmup) {
        return Err(Error::InvalidInput(
            "need points > 0 and warmup in [0, 1)".into(),
        ));
    }
    let ecfg = Config::new(period)
        .with_lambda(cfg.lambda)
        .with_iters(cfg.iters)
        .with_shift_window(cfg.shift_window.min(period.saturating_sub(1)));
    let t0 = ecfg.init_len;
    let series = random_stream(t0 + cfg.points, period, cfg.noise, cfg.seed ^ period as u64);
    let (init, stream) = series.values.split_at(t0);
    let skip = (cfg.points as f64 * cfg.warmup) as usize;
    let mut lat = Vec::with_capacity(cfg.points - skip);
    let mut ops = Vec::with_capacity(cfg.points - skip);
    let mut searches = 0;
    if cfg.oracle {
        let mut engine = ModifiedJointStl::new(init, &ecfg)?;
        for (k, &y) in stream.iter().enumerate() {
            let start = Instant::now();
            engine.push(y)?;
            let dt = start.elapsed().as_secs_f64() * 1e6;
            if k >= skip {
                lat.push(dt);
            }
        }
    } else {
        let mut state = DecomposerState::initialize(init, &ecfg)?;
        for (k, &y) in stream.iter().enumerate() {
            let start = Instant::now();
            let u = state.update_detailed(y)?;
            let dt = start.elapsed().as_secs_f64() * 1e6;
            if k >= skip {
                lat.push(dt);
                if u.searched {
                    searches += 1;
                } else {
                    ops.push(u.ops);
                }
            }
        }
    }
    Ok(summarize(period, lat, &ops, searches))
}

/// Runs [`bench_period`] for every configured period.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    let rows = cfg
        .periods
        .iter()
        .map(|&p| {
            log::info!("benchmarking T = {p}");
            bench_period(cfg, p)
        })
        .collect::<Result<_>>()?;
    Ok(BenchReport {
        oracle: cfg.oracle,
        rows,
    })
}
