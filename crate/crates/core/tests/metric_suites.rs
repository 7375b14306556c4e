use ftgap::metrics::*;
use proptest::prelude::*;

fn reversal_curve(values: &[f64]) -> GapCurve {
    GapCurve::new((-8..-8 + values.len() as i64).collect(), values.to_vec()).unwrap()
}

#[test]
fn commitment_reference_rows() {
    let a = Commitment::from_rates(0.799, 0.232);
    assert!((a.commitment - 0.567).abs() < 1e-12);
    let b = Commitment::from_rates(0.829, 0.201);
    assert!((b.commitment - 0.628).abs() < 1e-12);
}

proptest! {
    #[test]
    fn onset_censored_iff_no_qualifying_run(v in prop::collection::vec(-0.2f64..0.3, 1..60), run in 1usize..5) {
        let curve = GapCurve::from_values(v.clone()).unwrap();
        let cfg = OnsetConfig { run_length: run, ..OnsetConfig::default() };
        let t = onset_t(&curve, &cfg).unwrap();
        let found = v.windows(run).position(|w| w.iter().all(|x| *x > 0.05));
        match found {
            Some(i) => {
                prop_assert!(!t.censored);
                prop_assert_eq!(t.time, curve.times()[i]);
            }
            None => {
                prop_assert!(t.censored);
                prop_assert_eq!(t.time, v.len() as i64);
            }
        }
    }

    #[test]
    fn onset_censoring_uses_declared_horizon(n in 1usize..30, horizon in 30i64..500) {
        let curve = GapCurve::from_values(vec![0.0; n]).unwrap();
        let cfg = OnsetConfig { total_t: Some(horizon), ..OnsetConfig::default() };
        prop_assert_eq!(onset_t(&curve, &cfg).unwrap(), EventTime { time: horizon, censored: true });
    }

    #[test]
    fn aug_pos_ignores_constant_offsets(v in prop::collection::vec(-1.0f64..1.0, 34), c in -10.0f64..10.0) {
        let cfg = AugPosConfig::default();
        let a = aug_pos(&reversal_curve(&v), &cfg).unwrap();
        let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
        let b = aug_pos(&reversal_curve(&shifted), &cfg).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn aug_pos_ignores_points_outside_windows(v in prop::collection::vec(-1.0f64..1.0, 34), extra in prop::collection::vec(-5.0f64..5.0, 1..10)) {
        let cfg = AugPosConfig::default();
        let a = aug_pos(&reversal_curve(&v), &cfg).unwrap();
        let mut times: Vec<i64> = (-8 - extra.len() as i64..-8).collect();
        times.extend(-8..26);
        let mut values = extra.clone();
        values.extend(&v);
        let b = aug_pos(&GapCurve::new(times, values).unwrap(), &cfg).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn aug_norm_zero_for_nonpositive_curves(v in prop::collection::vec(-1.0f64..=0.0, 1..50)) {
        prop_assert_eq!(aug_norm(&GapCurve::from_values(v).unwrap()).unwrap(), 0.0);
    }
}
