mod common;

use common::{dense_batch_gram, dense_solve, mae, max_abs_diff};
use oneshotstl::batch::{
    auxiliary_objective, batch_objective, build_batch_system, irls_weight_p, irls_weight_q,
    joint_stl, joint_stl_traced, modified_joint_stl, solve_batch_system, BatchParams, IrlsWeights,
};
use oneshotstl::synth::trend_season;
use oneshotstl::Config;
use proptest::prelude::*;

fn params(period: usize, lambda: f64, n: usize) -> BatchParams {
    BatchParams::from_config(&Config::new(period).with_lambda(lambda), n)
}

#[test]
fn unit_weight_system_matches_operator_gram() {
    let y = [1.0, 2.0, 0.5, -1.0, 3.0, 2.0];
    let sys = build_batch_system(&y, 2, &IrlsWeights::ones(6), 1.0, 1.0, 0.0).unwrap();
    let g = dense_batch_gram(6, 2, &[1.0; 5], &[1.0; 4], 1.0, 1.0, 0.0);
    assert_eq!(sys.to_dense(), g);
}

#[test]
fn batch_solve_matches_dense_for_both_orderings() {
    for (n, period) in [(12, 3), (40, 4), (60, 20), (90, 9), (64, 31)] {
        let y: Vec<f64> = (0..n)
            .map(|t| (t as f64 * 0.37).sin() * 2.0 + 0.05 * t as f64)
            .collect();
        let trend: Vec<f64> = y.iter().map(|v| v * 0.5).collect();
        let w = IrlsWeights::from_trend(&trend, 1e-3);
        let sys = build_batch_system(&y, period, &w, 2.0, 1.5, 0.1).unwrap();
        let x = solve_batch_system(&sys).unwrap();
        let dense = dense_solve(&sys.to_dense(), &sys.b);
        let scale = dense.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        assert!(max_abs_diff(&x, &dense) <= 1e-9 * scale, "N={n} T={period}");
    }
}

#[test]
fn constant_series_goes_to_trend() {
    let y = vec![4.5; 40];
    let d = joint_stl(&y, &params(5, 1.0, 40)).unwrap();
    assert!(d.trend.iter().all(|t| (t - 4.5).abs() < 1e-6));
    assert!(d.seasonal.iter().all(|s| s.abs() < 1e-6));
    assert!(d.residual.iter().all(|r| r.abs() < 1e-6));
}

#[test]
fn recovers_trend_and_season() {
    // A ramp pays λ₁ per unit of rise, so linear trends need a small λ.
    let s = trend_season(400, 20, 0.01, 0.0, 0);
    let d = joint_stl(&s.values, &params(20, 0.1, 400)).unwrap();
    assert!(
        mae(&d.trend, &s.trend) < 0.02,
        "{}",
        mae(&d.trend, &s.trend)
    );
    assert!(mae(&d.seasonal, &s.seasonal) < 0.02);
}

#[test]
fn residual_closes_identity() {
    let s = trend_season(200, 10, 0.03, 0.2, 3);
    let d = joint_stl(&s.values, &params(10, 1.0, 200)).unwrap();
    for t in 0..200 {
        assert_eq!((d.trend[t] + d.seasonal[t]) + d.residual[t], s.values[t]);
    }
}

#[test]
fn objective_descends() {
    for seed in 0..3 {
        let s = trend_season(300, 25, 0.02, 0.3, seed);
        let (_, trace) = joint_stl_traced(&s.values, &params(25, 3.0, 300)).unwrap();
        for w in trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{trace:?}");
        }
    }
}

#[test]
fn short_or_broken_input_is_rejected() {
    assert!(joint_stl(&[1.0; 9], &params(5, 1.0, 9)).is_err());
    let mut y = vec![1.0; 20];
    y[3] = f64::NAN;
    assert!(joint_stl(&y, &params(5, 1.0, 20)).is_err());
}

#[test]
fn modified_recursion_on_constant_stream() {
    let cfg = Config::new(6).with_shift_window(0);
    let init = vec![2.0; cfg.init_len];
    let out = modified_joint_stl(&init, &[2.0; 20], &cfg).unwrap();
    for p in out {
        assert!((p.trend - 2.0).abs() < 1e-6);
        assert!(p.seasonal.abs() < 1e-6);
        assert!(p.residual.abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weights_are_positive_and_finite(a in -1e6f64..1e6, b in -1e6f64..1e6, c in -1e6f64..1e6) {
        for w in [irls_weight_p(a, b, 1e-10), irls_weight_q(a, b, c, 1e-10)] {
            prop_assert!(w > 0.0 && w.is_finite());
        }
    }

    #[test]
    fn batch_system_matches_gram(
        n in 5usize..14,
        period in 2usize..5,
        p in prop::collection::vec(0.01f64..50.0, 14),
        q in prop::collection::vec(0.01f64..50.0, 14),
        ridge in 0.0f64..1.0,
    ) {
        prop_assume!(n > period);
        let w = IrlsWeights { p: p[..n - 1].to_vec(), q: q[..n - 2].to_vec() };
        let sys = build_batch_system(&vec![0.0; n], period, &w, 1.3, 0.7, ridge).unwrap();
        let a = sys.to_dense();
        let g = dense_batch_gram(n, period, &w.p, &w.q, 1.3, 0.7, ridge);
        for i in 0..2 * n {
            for j in 0..2 * n {
                prop_assert!((a[i][j] - g[i][j]).abs() <= 1e-12 * (1.0 + g[i][j].abs()));
                prop_assert_eq!(a[i][j].to_bits(), a[j][i].to_bits());
            }
        }
    }

    /// With weights refreshed from the same trend the auxiliary objective
    /// equals the smoothed objective.
    #[test]
    fn auxiliary_objective_recovers_smoothed(
        y in prop::collection::vec(-3.0f64..3.0, 12),
        trend in prop::collection::vec(-3.0f64..3.0, 12),
        seasonal in prop::collection::vec(-1.0f64..1.0, 12),
        flat in 0usize..6,
    ) {
        let mut trend = trend;
        for t in 1..=flat {
            trend[t] = trend[0];
        }
        let prm = params(3, 2.0, 12);
        let w = IrlsWeights::from_trend(&trend, prm.weight_floor);
        let aux = auxiliary_objective(&y, &trend, &seasonal, &w, &prm);
        let obj = batch_objective(&y, &trend, &seasonal, &prm);
        prop_assert!((aux - obj).abs() <= 1e-9 * (1.0 + obj.abs()), "{} vs {}", aux, obj);
    }
}
