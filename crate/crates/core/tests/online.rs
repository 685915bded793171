mod common;

use common::mae;
use oneshotstl::batch::modified_joint_stl;
use oneshotstl::synth::{periodic, phase_shift, random_stream, sinusoid, trend_season};
use oneshotstl::{Config, DecomposerState, Error, OneShotStl};
use proptest::prelude::*;

fn max_gap(period: usize, iters: usize, points: usize, seed: u64) -> f64 {
    let cfg = Config::new(period).with_iters(iters).with_shift_window(0);
    let s = random_stream(cfg.init_len + points, period, 0.1, seed);
    let (init, stream) = s.values.split_at(cfg.init_len);
    let oracle = modified_joint_stl(init, stream, &cfg).unwrap();
    let mut state = DecomposerState::initialize(init, &cfg).unwrap();
    let mut gap = 0.0f64;
    for (&y, o) in stream.iter().zip(&oracle) {
        let p = state.update(y).unwrap();
        gap = gap
            .max((p.trend - o.trend).abs())
            .max((p.seasonal - o.seasonal).abs())
            .max((p.residual - o.residual).abs());
    }
    gap
}

#[test]
fn matches_full_rebuild_oracle() {
    for (period, iters, seed) in [(20, 1, 1), (20, 8, 2), (50, 8, 3), (97, 1, 4)] {
        let g = max_gap(period, iters, 250, seed);
        assert!(g <= 1e-6, "T={period} I={iters}: {g:e}");
    }
}

#[test]
fn constant_init_gives_empty_buffer() {
    let cfg = Config::new(8);
    let state = DecomposerState::initialize(&vec![3.0; cfg.init_len], &cfg).unwrap();
    assert!(state.seasonal().values().iter().all(|v| v.abs() < 1e-6));
    assert!((state.last_trend() - 3.0).abs() < 1e-6);
    assert_eq!(state.t_counter(), cfg.init_len as u64);
}

#[test]
fn init_buffer_recovers_sinusoid() {
    let period = 25;
    let cfg = Config::new(period).with_lambda(0.1);
    let s = trend_season(cfg.init_len, period, 0.01, 0.0, 0);
    let state = DecomposerState::initialize(&s.values, &cfg).unwrap();
    let truth = sinusoid(period, period, 1.0, 0.0);
    assert!(mae(state.seasonal().values(), &truth) < 0.05);
}

#[test]
fn short_init_is_rejected() {
    let cfg = Config::new(10).with_init_len(19);
    let err = DecomposerState::initialize(&[0.0; 19], &cfg).unwrap_err();
    assert_eq!(err, Error::InvalidConfig("t₀ ≥ 2T".into()));
}

#[test]
fn constant_stream_stays_in_trend() {
    let cfg = Config::new(12);
    let mut state = DecomposerState::initialize(&vec![-1.5; cfg.init_len], &cfg).unwrap();
    for _ in 0..100 {
        let p = state.update(-1.5).unwrap();
        assert!((p.trend + 1.5).abs() < 1e-6);
        assert!(p.seasonal.abs() < 1e-6 && p.residual.abs() < 1e-6);
        assert_eq!(p.shift, 0);
    }
}

#[test]
fn outputs_are_deterministic() {
    let cfg = Config::new(30);
    let s = random_stream(cfg.init_len + 300, 30, 0.2, 9);
    let run = || {
        let mut st = DecomposerState::initialize(&s.values[..cfg.init_len], &cfg).unwrap();
        s.values[cfg.init_len..]
            .iter()
            .map(|&y| st.update(y).unwrap())
            .collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn snapshot_resumes_bit_identically() {
    let cfg = Config::new(16);
    let s = random_stream(cfg.init_len + 200, 16, 0.1, 4);
    let (init, stream) = s.values.split_at(cfg.init_len);
    let mut a = DecomposerState::initialize(init, &cfg).unwrap();
    for &y in &stream[..100] {
        a.update(y).unwrap();
    }
    let mut b = DecomposerState::restore(&a.snapshot().unwrap()).unwrap();
    assert_eq!(a, b);
    for &y in &stream[100..] {
        assert_eq!(a.update(y).unwrap(), b.update(y).unwrap());
    }
}

#[test]
fn snapshot_version_is_checked() {
    let cfg = Config::new(4);
    let st = DecomposerState::initialize(&[1.0; 16], &cfg).unwrap();
    let json = st
        .snapshot()
        .unwrap()
        .replacen("\"version\":1", "\"version\":99", 1);
    assert!(matches!(
        DecomposerState::restore(&json),
        Err(Error::Snapshot(_))
    ));
}

#[test]
fn phase_shift_is_found_and_absorbed() {
    let period = 50;
    let cfg = Config::new(period).with_lambda(10.0).with_shift_window(5);
    let at = cfg.init_len + 2 * period;
    let s = phase_shift(at + 3 * period, period, at, 3, 0.005, 1);
    let (init, stream) = s.values.split_at(cfg.init_len);
    let mut st = DecomposerState::initialize(init, &cfg).unwrap();
    let (mut pre, mut post) = (Vec::new(), Vec::new());
    let mut trigger = None;
    for (k, &y) in stream.iter().enumerate() {
        let g = cfg.init_len + k;
        let u = st.update_detailed(y).unwrap();
        if u.point.shift != 0 && trigger.is_none() {
            trigger = Some((g, u.point.shift));
        }
        if g < at {
            pre.push(u.point.residual.abs());
        } else if g >= at + period {
            post.push(u.point.residual.abs());
        }
    }
    assert_eq!(trigger, Some((at, 3)));
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(mean(&post) < 3.0 * mean(&pre));
}

#[test]
fn candidate_search_prefers_true_shift() {
    let period = 100;
    let cfg = Config::new(period).with_lambda(10.0).with_shift_window(20);
    let at = cfg.init_len + period;
    let s = phase_shift(at + 1, period, at, 3, 0.0, 0);
    let (init, stream) = s.values.split_at(cfg.init_len);
    let mut st = DecomposerState::initialize(init, &cfg).unwrap();
    let mut plain = DecomposerState::initialize(init, &cfg.with_shift_window(0)).unwrap();
    for &y in &stream[..period] {
        st.update(y).unwrap();
        plain.update(y).unwrap();
    }
    let (delta, point, states) = st.evaluate_shift_candidates(s.values[at]).unwrap();
    assert_eq!(delta, 3);
    assert_eq!(states.len(), cfg.max_iters);
    let unshifted = plain.update(s.values[at]).unwrap();
    assert!(point.residual.abs() < unshifted.residual.abs());
    assert_eq!(st.update(s.values[at]).unwrap().shift, 3);
}

#[test]
fn unit_window_searches_neighbors() {
    let period = 40;
    let cfg = Config::new(period).with_lambda(10.0).with_shift_window(1);
    let at = cfg.init_len + period;
    let s = phase_shift(at + 1, period, at, 1, 0.0, 0);
    let mut st = DecomposerState::initialize(&s.values[..cfg.init_len], &cfg).unwrap();
    for &y in &s.values[cfg.init_len..at] {
        st.update(y).unwrap();
    }
    let (delta, _, _) = st.evaluate_shift_candidates(s.values[at]).unwrap();
    assert_eq!(delta, 1);
}

#[test]
fn work_per_point_is_constant() {
    let cfg = Config::new(200).with_shift_window(0);
    let s = random_stream(cfg.init_len + 10_000, 200, 0.1, 2);
    let mut st = DecomposerState::initialize(&s.values[..cfg.init_len], &cfg).unwrap();
    let ops: Vec<u64> = s.values[cfg.init_len..]
        .iter()
        .map(|&y| st.update_detailed(y).unwrap().ops)
        .collect();
    assert_eq!(ops[9], ops[9_999]);
    assert!(ops.iter().all(|&o| o == ops[0]));
}

#[test]
fn steady_state_buffer_is_a_fixed_point() {
    let pattern: Vec<f64> = (0..20)
        .map(|k| (k as f64 * 0.9).cos() + 0.3 * (k % 3) as f64)
        .collect();
    let cfg = Config::new(20);
    let y = periodic(cfg.init_len + 400, &pattern);
    let mut st = DecomposerState::initialize(&y[..cfg.init_len], &cfg).unwrap();
    for &v in &y[cfg.init_len..cfg.init_len + 200] {
        st.update(v).unwrap();
    }
    let before = st.seasonal().values().to_vec();
    for &v in &y[cfg.init_len + 200..cfg.init_len + 220] {
        st.update(v).unwrap();
    }
    let after = st.seasonal().values();
    assert!(before.iter().zip(after).all(|(a, b)| (a - b).abs() < 1e-6));
}

#[test]
fn wrapper_buffers_until_initialized() {
    let cfg = Config::new(5);
    let mut w = OneShotStl::new(&cfg).unwrap();
    assert_eq!(w.update(1.0), Err(Error::NotInitialized));
    assert_eq!(w.forecast(1), Err(Error::NotInitialized));
    for k in 0..cfg.init_len {
        assert_eq!(w.push((k % 5) as f64).unwrap(), None);
    }
    assert_eq!(w.take_init().unwrap().len(), cfg.init_len);
    assert!(w.push(0.0).unwrap().is_some());
}

#[test]
fn non_finite_input_leaves_state_untouched() {
    let cfg = Config::new(5);
    let mut st = DecomposerState::initialize(&[0.0; 20], &cfg).unwrap();
    let before = st.clone();
    assert!(matches!(st.update(f64::NAN), Err(Error::NonFinite { .. })));
    assert_eq!(st, before);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn components_reconstruct_input(
        seed in 0u64..1000,
        period in 3usize..12,
        tail in prop::collection::vec(-50.0f64..50.0, 1..60),
    ) {
        let cfg = Config::new(period);
        let s = random_stream(cfg.init_len, period, 0.3, seed);
        let mut st = DecomposerState::initialize(&s.values, &cfg).unwrap();
        for &y in &tail {
            let p = st.update(y).unwrap();
            // Bit equality is not always representable once |τ + s| ≫ |y|;
            // the residual is nudged to the closest reachable sum.
            let scale = p.trend.abs().max(p.seasonal.abs()).max(y.abs());
            prop_assert!((p.value() - y).abs() <= 2.0 * f64::EPSILON * scale);
            let f = p.trend + p.seasonal;
            if f * y > 0.0 && f.abs() <= 2.0 * y.abs() && y.abs() <= 2.0 * f.abs() {
                prop_assert_eq!(p.value(), y);
            }
        }
    }

    #[test]
    fn buffer_index_stays_in_range(t in 0u64..1_000_000, delta in -40i64..40, shifts in prop::collection::vec(-30i64..30, 0..5)) {
        let mut b = oneshotstl::SeasonalBuffer::new(vec![0.0; 17]).unwrap();
        for d in shifts {
            b.shift(d);
        }
        prop_assert!(b.index(t, delta) < 17);
    }
}
