use oneshotstl::synth::{periodic, random_stream};
use oneshotstl::{forecast_horizon, forecast_step, Config, DecomposerState, Error};
use proptest::prelude::*;

fn run(cfg: &Config, y: &[f64]) -> DecomposerState {
    let mut st = DecomposerState::initialize(&y[..cfg.init_len], cfg).unwrap();
    for &v in &y[cfg.init_len..] {
        st.update(v).unwrap();
    }
    st
}

fn pattern(period: usize) -> Vec<f64> {
    (0..period)
        .map(|k| (k as f64 * 1.3).sin() + 0.2 * (k % 4) as f64 - 0.3)
        .collect()
}

#[test]
fn steady_periodic_stream_is_forecast_exactly() {
    for period in [7, 24, 60] {
        let cfg = Config::new(period);
        let pat = pattern(period);
        let n = cfg.init_len + 5 * period + 3;
        let y = periodic(n + 2 * period, &pat);
        let st = run(&cfg, &y[..n]);
        let f = forecast_horizon(&st, 2 * period).unwrap();
        let err = f
            .iter()
            .zip(&y[n..])
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / f.len() as f64;
        assert!(err <= 1e-6, "T={period}: {err:e}");
    }
}

#[test]
fn forecast_does_not_mutate() {
    let cfg = Config::new(10);
    let st = run(&cfg, &random_stream(cfg.init_len + 50, 10, 0.1, 3).values);
    let before = st.clone();
    forecast_horizon(&st, 25).unwrap();
    assert_eq!(st, before);
}

#[test]
fn zero_horizon_is_rejected() {
    let cfg = Config::new(4);
    let st = run(&cfg, &[1.0; 20]);
    assert!(matches!(
        forecast_horizon(&st, 0),
        Err(Error::InvalidInput(_))
    ));
    assert!(matches!(forecast_step(&st, 0), Err(Error::InvalidInput(_))));
}

#[test]
fn level_shift_moves_forecasts() {
    let cfg = Config::new(16);
    let base = random_stream(cfg.init_len + 120, 16, 0.1, 8).values;
    let lifted: Vec<f64> = base.iter().map(|v| v + 25.0).collect();
    let a = forecast_horizon(&run(&cfg, &base), 40).unwrap();
    let b = forecast_horizon(&run(&cfg, &lifted), 40).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((y - x - 25.0).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn horizon_is_periodic_and_concatenated(seed in 0u64..500, period in 2usize..20, extra in 0usize..40, j in 1usize..60) {
        let cfg = Config::new(period);
        let st = run(&cfg, &random_stream(cfg.init_len + extra, period, 0.2, seed).values);
        let h = forecast_horizon(&st, j).unwrap();
        prop_assert_eq!(h.len(), j);
        prop_assert_eq!(h[j - 1], forecast_step(&st, j).unwrap());
        prop_assert_eq!(forecast_step(&st, j).unwrap(), forecast_step(&st, j + period).unwrap());
    }
}
