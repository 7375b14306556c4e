//! The two-timescale learner.
//!
//! A fast channel integrates noisy feedback `o(t)` and a slow channel integrates the
//! true binary state `s(t)`, each as an exponential moving average. After a state
//! reversal the fast channel re-aligns first, which opens a transient gap between
//! the two. This module simulates the learner and provides the closed-form
//! expectation of that gap, its peak, and its cumulative area.
//!
//! # Simulated gap
//!
//! Each channel relaxes toward its own fixed point: the slow channel toward `s`, the
//! fast channel toward `(1 - eps) * s + eps * (1 - s)`. The per-step gap is the
//! difference of the two residual displacements, each normalized by the channel's
//! displacement at a reversal and scaled by `delta`:
//!
//! ```text
//! gap = delta * ( (fp_slow - x_slow) * d  -  (fp_fast - x_fast) * d / (1 - 2 eps) )
//! ```
//!
//! with `d = 2 s - 1` the direction of the most recent reversal. Both terms start at
//! `delta` right after a reversal and decay in expectation as `(1 - alpha)^k`, so the
//! ensemble mean equals `delta * ((1 - a_slow)^k - (1 - a_fast)^k)` exactly and
//! vanishes identically when the two rates match.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{fmt, rng};

/// Update rates of the two channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnerParams {
    pub alpha_fast: f64,
    pub alpha_slow: f64,
}

impl LearnerParams {
    /// Validates `0 < alpha_slow <= alpha_fast <= 1`.
    pub fn new(alpha_fast: f64, alpha_slow: f64) -> Result<Self> {
        let p = LearnerParams {
            alpha_fast,
            alpha_slow,
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds parameters from the slow rate and the timescale ratio `r`.
    pub fn from_ratio(alpha_slow: f64, ratio: f64) -> Result<Self> {
        Self::new(alpha_slow * ratio, alpha_slow)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_slow > 0.0 && self.alpha_slow <= 1.0) {
            return Err(Error::param("alpha_slow", format!("{} not in (0, 1]", self.alpha_slow)));
        }
        if !(self.alpha_fast >= self.alpha_slow && self.alpha_fast <= 1.0) {
            return Err(Error::param(
                "alpha_fast",
                format!("{} not in [alpha_slow, 1]", self.alpha_fast),
            ));
        }
        Ok(())
    }

    /// Timescale ratio `r = alpha_fast / alpha_slow >= 1`.
    pub fn ratio(&self) -> f64 {
        self.alpha_fast / self.alpha_slow
    }
}

/// Binary reversal environment observed through symmetric feedback noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub noise_eps: f64,
    pub horizon: usize,
    /// Steps at which the true state flips; strictly increasing, all `< horizon`.
    pub reversal_times: Vec<usize>,
    pub delta: f64,
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.noise_eps) {
            return Err(Error::param("noise_eps", format!("{} not in [0, 0.5)", self.noise_eps)));
        }
        if self.horizon == 0 {
            return Err(Error::param("horizon", "must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::param("delta", "must be positive and finite"));
        }
        for w in self.reversal_times.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::param("reversal_times", "must be strictly increasing"));
            }
        }
        if let Some(&last) = self.reversal_times.last() {
            if last >= self.horizon {
                return Err(Error::param("reversal_times", "all reversals must precede the horizon"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnerState {
    pub x_fast: f64,
    pub x_slow: f64,
}

impl LearnerState {
    /// Both channels resting at their fixed points for state `s`.
    pub fn at_fixed_point(s: u8, noise_eps: f64) -> Self {
        LearnerState {
            x_fast: fast_fixed_point(s, noise_eps),
            x_slow: s as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub s: u8,
    pub o: u8,
    pub x_fast: f64,
    pub x_slow: f64,
    pub gap: f64,
}

/// Per-step record of one simulated run. `x_fast`/`x_slow` are the estimates held
/// at step `t`, before the update driven by `o(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub seed: u64,
    pub records: Vec<StepRecord>,
}

impl Trajectory {
    pub fn gaps(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.gap).collect()
    }

    /// Writes `t,s,o,x_fast,x_slow,gap` with a header row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "s", "o", "x_fast", "x_slow", "gap"])?;
        for r in &self.records {
            w.write_record([
                r.t.to_string(),
                r.s.to_string(),
                r.o.to_string(),
                fmt::float(r.x_fast),
                fmt::float(r.x_slow),
                fmt::float(r.gap),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Expected fast-channel value under feedback noise.
pub fn fast_fixed_point(s: u8, noise_eps: f64) -> f64 {
    if s == 1 {
        1.0 - noise_eps
    } else {
        noise_eps
    }
}

/// One exponential-moving-average update of both channels.
pub fn step(state: LearnerState, s_true: u8, observation: u8, params: &LearnerParams) -> LearnerState {
    let o = observation as f64;
    let s = s_true as f64;
    LearnerState {
        x_fast: state.x_fast + params.alpha_fast * (o - state.x_fast),
        x_slow: state.x_slow + params.alpha_slow * (s - state.x_slow),
    }
}

/// Noisy feedback: `s` with probability `1 - eps`, `1 - s` otherwise. Consumes
/// exactly one uniform draw.
pub fn observe<R: Rng + ?Sized>(s_true: u8, noise_eps: f64, rng: &mut R) -> u8 {
    let u: f64 = rng.random();
    if u < noise_eps {
        1 - s_true
    } else {
        s_true
    }
}

/// Normalized residual-to-fixed-point gap of `state` for true state `s`.
pub fn gap_value(state: &LearnerState, s: u8, noise_eps: f64, delta: f64) -> f64 {
    let d = if s == 1 { 1.0 } else { -1.0 };
    let slow_residual = (s as f64 - state.x_slow) * d;
    let fast_residual = (fast_fixed_point(s, noise_eps) - state.x_fast) * d / (1.0 - 2.0 * noise_eps);
    delta * (slow_residual - fast_residual)
}

/// Runs the learner over `env.horizon` steps. The true state starts at 0 with both
/// channels at their fixed points and flips at every reversal time.
pub fn simulate(params: &LearnerParams, env: &EnvConfig, seed: u64) -> Result<Trajectory> {
    params.validate()?;
    env.validate()?;
    let mut rng = rng::stream(seed);
    let mut s: u8 = 0;
    let mut state = LearnerState::at_fixed_point(s, env.noise_eps);
    let mut reversals = env.reversal_times.iter().peekable();
    let mut records = Vec::with_capacity(env.horizon);
    for t in 0..env.horizon {
        if reversals.peek() == Some(&&t) {
            reversals.next();
            s = 1 - s;
        }
        let o = observe(s, env.noise_eps, &mut rng);
        records.push(StepRecord {
            t,
            s,
            o,
            x_fast: state.x_fast,
            x_slow: state.x_slow,
            gap: gap_value(&state, s, env.noise_eps, env.delta),
        });
        state = step(state, s, o, params);
    }
    Ok(Trajectory { seed, records })
}

/// Across-seed mean gap curve with its standard error per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleCurve {
    pub n_seeds: usize,
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
}

impl EnsembleCurve {
    /// Index and value of the maximum of the mean curve.
    pub fn peak(&self) -> (usize, f64) {
        self.mean
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best })
    }
}

/// Simulates one run per seed and accumulates the mean gap curve (Welford).
pub fn ensemble<I>(params: &LearnerParams, env: &EnvConfig, seeds: I) -> Result<EnsembleCurve>
where
    I: IntoIterator<Item = u64>,
{
    let mut mean = vec![0.0; env.horizon];
    let mut m2 = vec![0.0; env.horizon];
    let mut n = 0usize;
    for seed in seeds {
        let traj = simulate(params, env, seed)?;
        n += 1;
        let nf = n as f64;
        for (i, r) in traj.records.iter().enumerate() {
            let delta = r.gap - mean[i];
            mean[i] += delta / nf;
            m2[i] += delta * (r.gap - mean[i]);
        }
    }
    if n == 0 {
        return Err(Error::Empty("ensemble needs at least one seed"));
    }
    let std_err = m2
        .iter()
        .map(|&v| if n > 1 { (v / (n as f64 - 1.0) / n as f64).sqrt() } else { 0.0 })
        .collect();
    Ok(EnsembleCurve {
        n_seeds: n,
        mean,
        std_err,
    })
}

/// Decay law used by the expected-gap oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayModel {
    /// `exp(-alpha * t)`, the continuous-time limit.
    #[default]
    Continuous,
    /// `(1 - alpha)^t`, exact for the discrete updates.
    Discrete,
}

/// Closed-form expected gap `delta * (exp(-a_slow t) - exp(-a_fast t))`.
pub fn gap_closed_form(params: &LearnerParams, delta: f64, t: f64) -> f64 {
    gap_expected(params, delta, t, DecayModel::Continuous)
}

pub fn gap_expected(params: &LearnerParams, delta: f64, t: f64, model: DecayModel) -> f64 {
    if params.alpha_fast == params.alpha_slow {
        return 0.0;
    }
    match model {
        DecayModel::Continuous => delta * ((-params.alpha_slow * t).exp() - (-params.alpha_fast * t).exp()),
        DecayModel::Discrete => {
            let decay = |a: f64| if a >= 1.0 { if t == 0.0 { 1.0 } else { 0.0 } } else { (t * (-a).ln_1p()).exp() };
            delta * (decay(params.alpha_slow) - decay(params.alpha_fast))
        }
    }
}

/// Time of the gap maximum, `ln r / (alpha_slow (r - 1))`.
pub fn peak_time(params: &LearnerParams) -> Result<f64> {
    params.validate()?;
    let rm1 = params.ratio() - 1.0;
    if rm1 <= 0.0 {
        return Err(Error::DegenerateRates);
    }
    Ok(rm1.ln_1p() / (params.alpha_slow * rm1))
}

/// Peak gap `delta * r^(-1/(r-1)) * (1 - 1/r)`, extended continuously by 0 at `r = 1`.
pub fn peak_gap(params: &LearnerParams, delta: f64) -> Result<f64> {
    params.validate()?;
    let r = params.ratio();
    let rm1 = r - 1.0;
    if rm1 <= 0.0 {
        return Ok(0.0);
    }
    Ok(delta * (-rm1.ln_1p() / rm1).exp() * (rm1 / r))
}

/// Integration horizon for the cumulative gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Horizon {
    Finite(f64),
    Infinite,
}

/// Fraction of the infinite-horizon area still outstanding at time `horizon`.
pub fn aug_residual(params: &LearnerParams, horizon: f64) -> f64 {
    let (a_s, a_f) = (params.alpha_slow, params.alpha_fast);
    if a_f == a_s {
        return (-a_s * horizon).exp();
    }
    ((-a_s * horizon).exp() / a_s - (-a_f * horizon).exp() / a_f) / (1.0 / a_s - 1.0 / a_f)
}

/// Integral of the closed-form gap from 0 to the horizon.
pub fn aug_closed_form(params: &LearnerParams, delta: f64, horizon: Horizon) -> Result<f64> {
    params.validate()?;
    let (a_s, a_f) = (params.alpha_slow, params.alpha_fast);
    if a_f == a_s {
        return Ok(0.0);
    }
    match horizon {
        Horizon::Infinite => Ok(delta * (params.ratio() - 1.0) / a_f),
        Horizon::Finite(t) => {
            if !(t >= 0.0) {
                return Err(Error::param("horizon", "must be non-negative"));
            }
            // antiderivative of the closed form, evaluated directly for precision
            let area = -(-a_s * t).exp_m1() / a_s + (-a_f * t).exp_m1() / a_f;
            Ok(delta * area)
        }
    }
}
