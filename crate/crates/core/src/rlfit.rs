//! Rescorla–Wagner Q-learning with a softmax choice rule: likelihood, maximum
//! likelihood fitting and synthetic agents.
//!
//! Q starts at 0 for both options and rewards are coded 0/1. The optional decay
//! pulls the unchosen option toward 0 by `Q <- (1 - decay) Q` on every trial.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::behavior::TrialRecord;
use crate::error::{Error, Result};
use crate::{fmt, rng};

pub const N_OPTIONS: usize = 2;
/// Subjects with fewer trials are fitted but flagged.
pub const LOW_DATA_TRIALS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RWParams {
    pub alpha: f64,
    pub beta: f64,
    pub decay: Option<f64>,
}

impl RWParams {
    pub fn new(alpha: f64, beta: f64, decay: Option<f64>) -> Result<Self> {
        let p = RWParams { alpha, beta, decay };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::param("alpha", format!("{} not in [0, 1]", self.alpha)));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::param("beta", format!("{} is not a finite value >= 0", self.beta)));
        }
        if let Some(d) = self.decay {
            if !(0.0..=1.0).contains(&d) {
                return Err(Error::param("decay", format!("{d} not in [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RWState {
    pub q_values: [f64; N_OPTIONS],
}

pub fn q_update(state: RWState, action: usize, reward: f64, params: &RWParams) -> RWState {
    let mut q = state.q_values;
    q[action] += params.alpha * (reward - q[action]);
    if let Some(d) = params.decay {
        for (a, v) in q.iter_mut().enumerate() {
            if a != action {
                *v *= 1.0 - d;
            }
        }
    }
    RWState { q_values: q }
}

/// Log-probabilities of each option under `softmax(beta * Q)`.
pub fn log_choice_prob(state: &RWState, params: &RWParams) -> [f64; N_OPTIONS] {
    let z = state.q_values.map(|q| params.beta * q);
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    z.map(|v| v - lse)
}

pub fn choice_prob(state: &RWState, params: &RWParams) -> [f64; N_OPTIONS] {
    log_choice_prob(state, params).map(f64::exp)
}

/// `-sum ln P(choice)` with Q updated trial by trial from zero.
pub fn nll(params: &RWParams, trials: &[TrialRecord]) -> f64 {
    let mut state = RWState::default();
    // Neumaier summation
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for t in trials {
        let a = t.choice as usize;
        let x = -log_choice_prob(&state, params)[a];
        let s = sum + x;
        comp += if sum.abs() >= x.abs() { (sum - s) + x } else { (x - s) + sum };
        sum = s;
        state = q_update(state, a, f64::from(t.reward), params);
    }
    sum + comp
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: RWParams,
    pub nll: f64,
    /// Whether the simplex refinement met its tolerance.
    pub converged: bool,
    pub n_trials: usize,
    /// The fitted inverse temperature sits on the search ceiling.
    pub beta_at_bound: bool,
    pub low_data: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub include_decay: bool,
    pub alpha_points: usize,
    pub beta_points: usize,
    pub decay_points: usize,
    pub beta_max: f64,
    /// Ceiling used when the optimum lands on `beta_max`.
    pub beta_max_extended: f64,
    pub simplex_tol: f64,
    pub max_iter: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            include_decay: false,
            alpha_points: 21,
            beta_points: 21,
            decay_points: 11,
            beta_max: 10.0,
            beta_max_extended: 20.0,
            simplex_tol: 1e-4,
            max_iter: 500,
        }
    }
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

struct Outcome {
    x: Vec<f64>,
    f: f64,
    converged: bool,
}

/// Nelder–Mead on a box; trial points are clamped into `[lo, hi]`.
fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, start: &[f64], step: &[f64], lo: &[f64], hi: &[f64], tol: f64, max_iter: usize) -> Outcome {
    let n = start.len();
    let clamp = |x: &mut Vec<f64>| {
        for i in 0..n {
            x[i] = x[i].clamp(lo[i], hi[i]);
        }
    };
    let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += if v[i] + step[i] <= hi[i] { step[i] } else { -step[i] };
        clamp(&mut v);
        simplex.push(v);
    }
    let mut fx: Vec<f64> = simplex.iter().map(|x| f(x)).collect();
    let mut converged = false;
    for _ in 0..max_iter {
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| fx[a].total_cmp(&fx[b]).then(a.cmp(&b)));
        simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
        fx = idx.iter().map(|&i| fx[i]).collect();
        let diameter = simplex[1..]
            .iter()
            .map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if diameter < tol {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| {
            let mut v: Vec<f64> = (0..n).map(|j| centroid[j] + t * (simplex[n][j] - centroid[j])).collect();
            clamp(&mut v);
            v
        };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < fx[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[n] = xe;
                fx[n] = fe;
            } else {
                simplex[n] = xr;
                fx[n] = fr;
            }
        } else if fr < fx[n - 1] {
            simplex[n] = xr;
            fx[n] = fr;
        } else {
            let (xc, fc) = if fr < fx[n] {
                let x = along(-0.5);
                let v = f(&x);
                (x, v)
            } else {
                let x = along(0.5);
                let v = f(&x);
                (x, v)
            };
            if fc < fx[n].min(fr) {
                simplex[n] = xc;
                fx[n] = fc;
            } else {
                for i in 1..=n {
                    let v: Vec<f64> = (0..n).map(|j| simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j])).collect();
                    fx[i] = f(&v);
                    simplex[i] = v;
                }
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| fx[a].total_cmp(&fx[b])).unwrap_or(0);
    Outcome {
        x: simplex[best].clone(),
        f: fx[best],
        converged,
    }
}

fn to_params(x: &[f64], decay: bool) -> RWParams {
    RWParams {
        alpha: x[0],
        beta: x[1],
        decay: decay.then(|| x[2]),
    }
}

fn search(trials: &[TrialRecord], cfg: &FitConfig, beta_max: f64) -> (Outcome, Vec<f64>) {
    let decays = if cfg.include_decay { grid(0.0, 1.0, cfg.decay_points) } else { vec![0.0] };
    let mut best: (f64, Vec<f64>) = (f64::INFINITY, vec![]);
    for &a in &grid(0.0, 1.0, cfg.alpha_points) {
        for &b in &grid(0.0, beta_max, cfg.beta_points) {
            for &d in &decays {
                let x = vec![a, b, d];
                let v = nll(&to_params(&x, cfg.include_decay), trials);
                if v < best.0 {
                    best = (v, x);
                }
            }
        }
    }
    let dim = if cfg.include_decay { 3 } else { 2 };
    let start = &best.1[..dim];
    let step = [0.05, beta_max / 20.0, 0.1];
    let lo = [0.0; 3];
    let hi = [1.0, beta_max, 1.0];
    let mut out = nelder_mead(
        |x| nll(&to_params(x, cfg.include_decay), trials),
        start,
        &step[..dim],
        &lo[..dim],
        &hi[..dim],
        cfg.simplex_tol,
        cfg.max_iter,
    );
    if !out.converged && best.0 < out.f {
        out.x = start.to_vec();
        out.f = best.0;
    }
    (out, best.1)
}

/// Grid search followed by a bounded simplex refinement from the best grid cell.
///
/// When the optimum reaches `beta_max` the search reruns with the extended
/// ceiling. Without convergence the better of the grid and simplex points is kept
/// and `converged` is false.
pub fn fit(trials: &[TrialRecord], cfg: &FitConfig) -> Result<FitResult> {
    if trials.is_empty() {
        return Err(Error::Empty("fit needs at least one trial"));
    }
    if trials.iter().any(|t| t.choice as usize >= N_OPTIONS || t.reward > 1) {
        return Err(Error::param("trials", "choices must be 0/1 and rewards 0/1"));
    }
    let near = |b: f64, max: f64| b >= max * (1.0 - 1e-6);
    let (mut out, _) = search(trials, cfg, cfg.beta_max);
    let mut ceiling = cfg.beta_max;
    if near(out.x[1], cfg.beta_max) && cfg.beta_max_extended > cfg.beta_max {
        let (ext, _) = search(trials, cfg, cfg.beta_max_extended);
        if ext.f <= out.f {
            out = ext;
            ceiling = cfg.beta_max_extended;
        }
    }
    let params = to_params(&out.x, cfg.include_decay);
    Ok(FitResult {
        params,
        nll: out.f,
        converged: out.converged,
        n_trials: trials.len(),
        beta_at_bound: near(params.beta, ceiling),
        low_data: trials.len() < LOW_DATA_TRIALS,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectFit {
    pub subject_id: String,
    pub fit: FitResult,
}

/// Fits each subject's trials independently and in parallel, preserving order.
pub fn fit_subjects(records: &[TrialRecord], cfg: &FitConfig) -> Result<Vec<SubjectFit>> {
    crate::behavior::subjects(records)
        .par_iter()
        .map(|t| {
            Ok(SubjectFit {
                subject_id: t[0].subject_id.clone(),
                fit: fit(t, cfg)?,
            })
        })
        .collect()
}

/// Writes `subject_id,alpha,beta,decay,nll,converged,n_trials`; absent decay is an empty field.
pub fn write_fit_csv<W: Write>(fits: &[SubjectFit], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["subject_id", "alpha", "beta", "decay", "nll", "converged", "n_trials"])?;
    for s in fits {
        let p = s.fit.params;
        w.write_record([
            s.subject_id.clone(),
            fmt::float(p.alpha),
            fmt::float(p.beta),
            p.decay.map(fmt::float).unwrap_or_default(),
            fmt::float(s.fit.nll),
            s.fit.converged.to_string(),
            s.fit.n_trials.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Two-armed bandit whose better arm flips at each reversal trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditEnv {
    pub p_high: f64,
    pub p_low: f64,
    pub n_trials: usize,
    /// Trials at which the better arm switches; the better arm starts as 0.
    pub reversal_times: Vec<usize>,
}

impl BanditEnv {
    /// 75/25 schedule with `n_reversals` reversals evenly spread over `n_trials`.
    pub fn evenly_reversing(n_trials: usize, n_reversals: usize) -> Self {
        let block = n_trials / (n_reversals + 1);
        BanditEnv {
            p_high: 0.75,
            p_low: 0.25,
            n_trials,
            reversal_times: (1..=n_reversals).map(|k| k * block).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_high", self.p_high), ("p_low", self.p_low)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::param(name, format!("{p} not in [0, 1]")));
            }
        }
        if self.reversal_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("reversal_times", "must be strictly increasing"));
        }
        Ok(())
    }
}

/// Samples choices from the softmax policy and Bernoulli rewards from the bandit.
pub fn simulate_agent(params: &RWParams, env: &BanditEnv, seed: u64, subject_id: &str) -> Result<Vec<TrialRecord>> {
    params.validate()?;
    env.validate()?;
    let mut g = rng::stream(seed);
    let mut state = RWState::default();
    let mut better = 0u8;
    let mut next_rev = env.reversal_times.iter().peekable();
    let mut out = Vec::with_capacity(env.n_trials);
    for t in 0..env.n_trials {
        while next_rev.next_if(|&&r| r <= t).is_some() {
            better = 1 - better;
        }
        let p = choice_prob(&state, params);
        let choice = u8::from(g.random::<f64>() >= p[0]);
        let p_reward = if choice == better { env.p_high } else { env.p_low };
        let reward = u8::from(g.random::<f64>() < p_reward);
        state = q_update(state, choice as usize, f64::from(reward), params);
        out.push(TrialRecord {
            subject_id: subject_id.into(),
            trial_index: t as u64,
            choice,
            reward,
            better_option: better,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(alpha: f64, beta: f64) -> RWParams {
        RWParams::new(alpha, beta, None).unwrap()
    }

    #[test]
    fn update_examples() {
        let s = RWState::default();
        assert_eq!(q_update(s, 0, 1.0, &p(0.0, 1.0)), s);
        assert_eq!(q_update(s, 0, 1.0, &p(0.5, 1.0)).q_values, [0.5, 0.0]);
        let s = RWState { q_values: [0.3, 0.8] };
        assert_eq!(q_update(s, 1, 0.0, &p(1.0, 1.0)).q_values, [0.3, 0.0]);
        let d = RWParams::new(0.5, 1.0, Some(0.5)).unwrap();
        assert_eq!(q_update(s, 1, 0.0, &d).q_values, [0.15, 0.4]);
    }

    #[test]
    fn softmax_examples() {
        assert_eq!(choice_prob(&RWState::default(), &p(0.3, 0.0)), [0.5, 0.5]);
        let pr = choice_prob(&RWState { q_values: [1.0, 0.0] }, &p(0.3, 4.0));
        // e^4 / (e^4 + 1)
        assert!((pr[0] - 0.982_013_790_037_908_4).abs() < 1e-15);
        let huge = choice_prob(&RWState { q_values: [800.0, 0.0] }, &p(0.3, 10.0));
        assert!(huge[0] == 1.0 && huge[1] >= 0.0);
    }

    #[test]
    fn nll_uniform_policy() {
        let env = BanditEnv::evenly_reversing(57, 2);
        let trials = simulate_agent(&p(0.4, 4.0), &env, 3, "x").unwrap();
        let n = nll(&p(0.7, 0.0), &trials);
        assert_eq!(n, 57.0 * std::f64::consts::LN_2);
        assert_eq!(nll(&p(0.7, 2.0), &[]), 0.0);
    }

    #[test]
    fn greedy_agent_tracks_better_arm() {
        let env = BanditEnv {
            p_high: 1.0,
            p_low: 0.0,
            n_trials: 200,
            reversal_times: vec![],
        };
        let trials = simulate_agent(&p(0.5, 50.0), &env, 9, "g").unwrap();
        assert!(trials[20..].iter().all(|t| t.choice == 0));
    }

    #[test]
    fn identical_choices_hit_beta_ceiling() {
        let trials: Vec<TrialRecord> = (0..60)
            .map(|i| TrialRecord {
                subject_id: "c".into(),
                trial_index: i,
                choice: 0,
                reward: 1,
                better_option: 0,
            })
            .collect();
        let f = fit(&trials, &FitConfig::default()).unwrap();
        assert!(f.beta_at_bound, "{f:?}");
        assert!(f.params.beta > 10.0);
    }

    #[test]
    fn fit_is_deterministic_and_bounded() {
        let env = BanditEnv::evenly_reversing(200, 3);
        let trials = simulate_agent(&p(0.4, 4.0), &env, 17, "d").unwrap();
        let cfg = FitConfig {
            include_decay: true,
            ..FitConfig::default()
        };
        let a = fit(&trials, &cfg).unwrap();
        let b = fit(&trials, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.nll >= 0.0 && a.nll <= 200.0 * std::f64::consts::LN_2 + 1e-9);
        assert!(a.params.decay.is_some());
        assert!(fit(&trials[..10], &FitConfig::default()).unwrap().low_data);
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let out = nelder_mead(
            |x| (x[0] - 0.3).powi(2) + 2.0 * (x[1] - 0.7).powi(2),
            &[0.9, 0.1],
            &[0.1, 0.1],
            &[0.0, 0.0],
            &[1.0, 1.0],
            1e-8,
            2000,
        );
        assert!(out.converged);
        assert!((out.x[0] - 0.3).abs() < 1e-6 && (out.x[1] - 0.7).abs() < 1e-6);
    }
}
