//! Noise × timescale-ratio grids of the two-timescale learner.
//!
//! Every cell simulates one reversal at `t = 0` for `seeds_per_cell` independent
//! seeds and summarizes the across-seed mean gap curve. Cells draw their seeds from
//! `(master_seed, cell_index, replicate)` only, so the output is identical for any
//! execution order or thread count.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{aug_norm, GapCurve};
use crate::twoscale::{ensemble, peak_gap, EnvConfig, LearnerParams};
use crate::{fmt, rng};

/// Largest ratio on the default axis.
pub const DEFAULT_MAX_RATIO: f64 = 63.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub noise_values: Vec<f64>,
    pub ratio_values: Vec<f64>,
    pub alpha_slow: f64,
    pub seeds_per_cell: usize,
    pub horizon: usize,
    pub delta: f64,
}

impl GridSpec {
    /// `n_noise × n_ratio` grid: noise evenly spaced on `[0, 0.475]`, ratios
    /// log-spaced from 1 to `min(63, 1/alpha_slow)`, horizon `10 / alpha_slow`.
    pub fn default_grid(n_noise: usize, n_ratio: usize, alpha_slow: f64, seeds_per_cell: usize) -> Self {
        let r_max = DEFAULT_MAX_RATIO.min(1.0 / alpha_slow);
        GridSpec {
            noise_values: linear_spaced(0.0, 0.475, n_noise),
            ratio_values: log_spaced(1.0, r_max, n_ratio),
            alpha_slow,
            seeds_per_cell,
            horizon: default_horizon(alpha_slow),
            delta: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.noise_values.is_empty() || self.ratio_values.is_empty() {
            return Err(Error::param("grid", "noise and ratio axes must be non-empty"));
        }
        if let Some(e) = self.noise_values.iter().find(|e| !(0.0..0.5).contains(*e)) {
            return Err(Error::param("noise_values", format!("{e} not in [0, 0.5)")));
        }
        if let Some(r) = self.ratio_values.iter().find(|r| !(**r >= 1.0)) {
            return Err(Error::param("ratio_values", format!("{r} < 1")));
        }
        if self.seeds_per_cell == 0 {
            return Err(Error::param("seeds_per_cell", "must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(Error::param("horizon", "must be at least 1"));
        }
        for &r in &self.ratio_values {
            LearnerParams::from_ratio(self.alpha_slow, r)?;
        }
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.noise_values.len() * self.ratio_values.len()
    }

    /// Row-major cell coordinates: noise outer, ratio inner.
    pub fn cell(&self, index: usize) -> (f64, f64) {
        let nr = self.ratio_values.len();
        (self.noise_values[index / nr], self.ratio_values[index % nr])
    }
}

/// `10 / alpha_slow` steps, rounded up.
pub fn default_horizon(alpha_slow: f64) -> usize {
    (10.0 / alpha_slow).ceil() as usize
}

pub fn linear_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    let mut v: Vec<f64> = linear_spaced(a, b, n).into_iter().map(f64::exp).collect();
    // pin the endpoints exactly
    if let Some(first) = v.first_mut() {
        *first = lo;
    }
    if n > 1 {
        v[n - 1] = hi;
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GapClass {
    Strong,
    Weak,
    Absent,
}

impl GapClass {
    pub fn as_str(self) -> &'static str {
        match self {
            GapClass::Strong => "strong",
            GapClass::Weak => "weak",
            GapClass::Absent => "absent",
        }
    }
}

/// `strong` for AUG ≥ 0.05, `weak` for 0.005 ≤ AUG < 0.05, `absent` below.
pub fn classify_cell(aug: f64) -> Result<GapClass> {
    if aug.is_nan() || aug < 0.0 {
        return Err(Error::param("aug", format!("{aug} is negative")));
    }
    Ok(if aug >= 0.05 {
        GapClass::Strong
    } else if aug >= 0.005 {
        GapClass::Weak
    } else {
        GapClass::Absent
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub eps: f64,
    pub r: f64,
    /// Peak of the across-seed mean gap curve.
    pub mean_peak: f64,
    /// Standard error of the mean curve at the peak.
    pub peak_std_err: f64,
    pub peak_step: usize,
    pub theory_peak: f64,
    /// Normalized positive area of the across-seed mean curve.
    pub mean_aug: f64,
    pub label: GapClass,
}

pub fn run_cell(spec: &GridSpec, index: usize, master_seed: u64) -> Result<CellResult> {
    let (eps, r) = spec.cell(index);
    let params = LearnerParams::from_ratio(spec.alpha_slow, r)?;
    let env = EnvConfig {
        noise_eps: eps,
        horizon: spec.horizon,
        reversal_times: vec![0],
        delta: spec.delta,
    };
    let seeds = (0..spec.seeds_per_cell as u64).map(|k| rng::mix_seed(master_seed, index as u64, k));
    let curve = ensemble(&params, &env, seeds)?;
    let (peak_step, mean_peak) = curve.peak();
    let mean_aug = aug_norm(&GapCurve::from_values(curve.mean.clone())?)?;
    Ok(CellResult {
        eps,
        r,
        mean_peak,
        peak_std_err: curve.std_err[peak_step],
        peak_step,
        theory_peak: peak_gap(&params, spec.delta)?,
        mean_aug,
        label: classify_cell(mean_aug)?,
    })
}

/// Runs every cell on the current rayon pool; results are ordered by cell index.
pub fn run_grid(spec: &GridSpec, master_seed: u64) -> Result<Vec<CellResult>> {
    spec.validate()?;
    (0..spec.n_cells())
        .into_par_iter()
        .map(|i| run_cell(spec, i, master_seed))
        .collect()
}

/// Coefficient of determination of `simulated` (observations) under `theory` (predictions).
pub fn r_squared(theory: &[f64], simulated: &[f64]) -> Result<f64> {
    if theory.len() != simulated.len() {
        return Err(Error::Mismatch("theory and simulation differ in length".into()));
    }
    if theory.len() < 2 {
        return Err(Error::InsufficientData("r_squared needs at least 2 points".into()));
    }
    let first = theory[0];
    if theory.iter().all(|&t| t == first) {
        return Err(Error::DegenerateVariance("theory series is constant"));
    }
    let m = simulated.iter().sum::<f64>() / simulated.len() as f64;
    let ss_tot: f64 = simulated.iter().map(|y| (y - m).powi(2)).sum();
    if ss_tot <= 0.0 {
        return Err(Error::DegenerateVariance("simulated series is constant"));
    }
    let ss_res: f64 = simulated.iter().zip(theory).map(|(y, t)| (y - t).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Writes `eps,r,mean_peak,theory_peak,mean_aug,label`.
pub fn write_phase_csv<W: Write>(cells: &[CellResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["eps", "r", "mean_peak", "theory_peak", "mean_aug", "label"])?;
    for c in cells {
        w.write_record([
            fmt::float(c.eps),
            fmt::float(c.r),
            fmt::float(c.mean_peak),
            fmt::float(c.theory_peak),
            fmt::float(c.mean_aug),
            c.label.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_boundaries() {
        assert_eq!(classify_cell(0.05).unwrap(), GapClass::Strong);
        assert_eq!(classify_cell(0.0049).unwrap(), GapClass::Absent);
        assert_eq!(classify_cell(0.005).unwrap(), GapClass::Weak);
        assert_eq!(classify_cell(0.0).unwrap(), GapClass::Absent);
        assert!(classify_cell(-1e-9).is_err());
    }

    #[test]
    fn r_squared_cases() {
        let t = [0.1, 0.4, 0.2, 0.9];
        assert_eq!(r_squared(&t, &t).unwrap(), 1.0);
        assert!(r_squared(&[0.5; 4], &t).is_err());
        assert!(r_squared(&t[..1], &t[..1]).is_err());
        let noisy = [3.0, -2.0, 5.0, -4.0];
        assert!(r_squared(&t, &noisy).unwrap() < 0.2);
    }

    #[test]
    fn axes() {
        let r = log_spaced(1.0, 63.0, 20);
        assert_eq!(r.len(), 20);
        assert_eq!((r[0], r[19]), (1.0, 63.0));
        assert!(r.windows(2).all(|w| w[1] > w[0]));
        let spec = GridSpec::default_grid(20, 20, 0.02, 2);
        assert_eq!(spec.n_cells(), 400);
        assert_eq!(*spec.ratio_values.last().unwrap(), 50.0);
        assert_eq!(spec.horizon, 500);
        spec.validate().unwrap();
        assert_eq!(spec.cell(21), (spec.noise_values[1], spec.ratio_values[1]));
    }

    #[test]
    fn rejects_rates_above_one() {
        let mut spec = GridSpec::default_grid(2, 2, 0.02, 1);
        spec.ratio_values = vec![1.0, 63.0];
        assert!(spec.validate().is_err());
    }

    #[test]
    fn rerun_is_identical_and_order_free() {
        let mut spec = GridSpec::default_grid(3, 4, 0.05, 5);
        spec.horizon = 120;
        let a = run_grid(&spec, 11).unwrap();
        let b = run_grid(&spec, 11).unwrap();
        assert_eq!(a, b);
        let serial: Vec<CellResult> = (0..spec.n_cells()).rev().map(|i| run_cell(&spec, i, 11).unwrap()).collect();
        let serial: Vec<CellResult> = serial.into_iter().rev().collect();
        assert_eq!(a, serial);
    }

    #[test]
    fn phase_csv_shape() {
        let mut spec = GridSpec::default_grid(2, 3, 0.05, 2);
        spec.horizon = 50;
        let cells = run_grid(&spec, 1).unwrap();
        let mut buf = Vec::new();
        write_phase_csv(&cells, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "eps,r,mean_peak,theory_peak,mean_aug,label");
        assert_eq!(lines.len(), 7);
    }
}
