//! Fixtures shared by the benchmarks.

use oneshotstl::synth::random_stream;
use oneshotstl::{Config, DecomposerState};

/// A state initialized on a synthetic stream of period `period`, plus four
/// periods of further observations to feed it cyclically. The trend is held
/// at its last init value over the tail so that wrapping around it is
/// seamless and never trips the phase-shift search.
pub fn warmed_state(period: usize, shift_window: usize) -> (DecomposerState, Vec<f64>) {
    let cfg = Config::new(period).with_shift_window(shift_window.min(period - 1));
    let n0 = cfg.init_len;
    let s = random_stream(n0 + 4 * period, period, 0.1, period as u64);
    let state = DecomposerState::initialize(&s.values[..n0], &cfg).expect("synthetic init");
    let level = s.trend[n0 - 1];
    let tail = (n0..s.values.len())
        .map(|k| s.values[k] - s.trend[k] + level)
        .collect();
    (state, tail)
}
