use ftgap::rlfit::*;
use ftgap::rng::mix_seed;
use ftgap::stats::median;

fn cohort(alpha: f64, beta: f64, n: usize, trials: usize, seed: u64) -> Vec<Vec<ftgap::behavior::TrialRecord>> {
    let params = RWParams::new(alpha, beta, None).unwrap();
    let env = BanditEnv::evenly_reversing(trials, 3);
    (0..n)
        .map(|s| simulate_agent(&params, &env, mix_seed(seed, s as u64, 0), &format!("s{s}")).unwrap())
        .collect()
}

#[test]
fn true_parameters_are_more_likely_than_shifted_ones() {
    let truth = RWParams::new(0.3, 5.0, None).unwrap();
    let shifted = RWParams::new(0.6, 5.0, None).unwrap();
    let subjects = cohort(0.3, 5.0, 100, 300, 41);
    let wins = subjects.iter().filter(|t| nll(&truth, t) < nll(&shifted, t)).count();
    assert!(wins >= 95, "{wins}/100");
}

#[test]
fn recovers_generating_parameters() {
    let fits: Vec<FitResult> = cohort(0.4, 4.0, 20, 300, 8)
        .iter()
        .map(|t| fit(t, &FitConfig::default()).unwrap())
        .collect();
    let da: Vec<f64> = fits.iter().map(|f| (f.params.alpha - 0.4).abs()).collect();
    let db: Vec<f64> = fits.iter().map(|f| (f.params.beta - 4.0).abs()).collect();
    assert!(median(&da) <= 0.15, "alpha error {}", median(&da));
    assert!(median(&db) <= 1.5, "beta error {}", median(&db));
    for f in &fits {
        assert!(f.nll.is_finite() && f.n_trials == 300 && !f.low_data);
    }
}

#[test]
fn indifferent_policy_costs_ln2_per_trial() {
    for t in cohort(0.5, 3.0, 5, 137, 2) {
        for alpha in [0.0, 0.3, 1.0] {
            let p = RWParams::new(alpha, 0.0, None).unwrap();
            assert_eq!(nll(&p, &t), t.len() as f64 * std::f64::consts::LN_2);
        }
    }
}

#[test]
fn fit_never_worse_than_truth() {
    let truth = RWParams::new(0.25, 6.0, None).unwrap();
    for t in cohort(0.25, 6.0, 8, 200, 13) {
        let f = fit(&t, &FitConfig::default()).unwrap();
        assert!(f.nll <= nll(&truth, &t) + 1e-6);
    }
}

#[test]
fn decay_fit_stays_in_bounds() {
    let params = RWParams::new(0.3, 5.0, Some(0.2)).unwrap();
    let t = simulate_agent(&params, &BanditEnv::evenly_reversing(200, 3), 5, "d").unwrap();
    let cfg = FitConfig {
        include_decay: true,
        ..FitConfig::default()
    };
    let f = fit(&t, &cfg).unwrap();
    let d = f.params.decay.unwrap();
    assert!((0.0..=1.0).contains(&d));
    assert!(f.nll <= nll(&params, &t) + 1e-6);
}
