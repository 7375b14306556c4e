//! Gap metrics shared by every analysis: normalized and baseline-corrected areas,
//! onset and recovery times, commitment indices, and the two smoothing filters.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt;

/// Time-indexed feedback-minus-truth series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapCurve {
    times: Vec<i64>,
    values: Vec<f64>,
}

impl GapCurve {
    pub fn new(times: Vec<i64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Mismatch(format!(
                "{} times for {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Ordering("gap curve times must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("values", "gap values must be finite"));
        }
        Ok(GapCurve { times, values })
    }

    /// Curve indexed `0..values.len()`.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let times = (0..values.len() as i64).collect();
        Self::new(times, values)
    }

    pub fn times(&self) -> &[i64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value_at(&self, t: i64) -> Option<f64> {
        self.times.binary_search(&t).ok().map(|i| self.values[i])
    }

    /// Reads `index,gap` CSV with a header row.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header = rdr.headers()?.clone();
        if header.len() != 2 || &header[0] != "index" || &header[1] != "gap" {
            return Err(Error::Schema(format!(
                "expected header `index,gap`, found `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row = i as u64 + 1;
            let parse_err = |column: &str, reason: String| Error::Parse {
                row,
                column: column.into(),
                reason,
            };
            if rec.len() != 2 {
                return Err(parse_err("*", format!("expected 2 fields, found {}", rec.len())));
            }
            let t: i64 = rec[0].trim().parse().map_err(|e| parse_err("index", format!("{e}")))?;
            let v: f64 = rec[1].trim().parse().map_err(|e| parse_err("gap", format!("{e}")))?;
            if !v.is_finite() {
                return Err(parse_err("gap", "non-finite value".into()));
            }
            times.push(t);
            values.push(v);
        }
        Self::new(times, values)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "gap"])?;
        for (t, v) in self.times.iter().zip(&self.values) {
            w.write_record([t.to_string(), fmt::float(*v)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `(1/T) * sum max(0, gap)` over all `T` points.
pub fn aug_norm(curve: &GapCurve) -> Result<f64> {
    if curve.is_empty() {
        return Err(Error::Empty("aug_norm of an empty curve"));
    }
    Ok(curve.values.iter().map(|v| v.max(0.0)).sum::<f64>() / curve.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OnsetConfig {
    /// Gap threshold; the gap must strictly exceed it.
    pub tau: f64,
    pub run_length: usize,
    /// Value reported when no onset occurs. Defaults to the number of points.
    pub total_t: Option<i64>,
}

impl Default for OnsetConfig {
    fn default() -> Self {
        OnsetConfig {
            tau: 0.05,
            run_length: 3,
            total_t: None,
        }
    }
}

/// An event time that may be right-censored at the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventTime {
    pub time: i64,
    pub censored: bool,
}

/// Runs of `run_length` consecutive values satisfying `pred`: position of the first run start.
fn first_run<F: Fn(f64) -> bool>(values: &[f64], run_length: usize, pred: F) -> Option<usize> {
    let mut run = 0;
    for (i, &v) in values.iter().enumerate() {
        if pred(v) {
            run += 1;
            if run == run_length {
                return Some(i + 1 - run_length);
            }
        } else {
            run = 0;
        }
    }
    None
}

/// First time at which the gap exceeds `tau` for `run_length` consecutive points,
/// else the horizon flagged as censored.
pub fn onset_t(curve: &GapCurve, cfg: &OnsetConfig) -> Result<EventTime> {
    if curve.is_empty() {
        return Err(Error::Empty("onset_t of an empty curve"));
    }
    if !(cfg.tau > 0.0) {
        return Err(Error::param("tau", "must be positive"));
    }
    if cfg.run_length == 0 {
        return Err(Error::param("run_length", "must be at least 1"));
    }
    Ok(match first_run(&curve.values, cfg.run_length, |v| v > cfg.tau) {
        Some(i) => EventTime {
            time: curve.times[i],
            censored: false,
        },
        None => EventTime {
            time: cfg.total_t.unwrap_or(curve.len() as i64),
            censored: true,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoveryConfig {
    pub accuracy_threshold: f64,
    pub run_length: usize,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        RecoveryConfig {
            accuracy_threshold: 0.65,
            run_length: 15,
        }
    }
}

/// First post-reversal index starting a run of `run_length` accuracies all above the
/// threshold; censored at the series length otherwise.
pub fn recovery_t(truth_accuracy: &[f64], cfg: &RecoveryConfig) -> Result<EventTime> {
    if !(cfg.accuracy_threshold > 0.5 && cfg.accuracy_threshold < 1.0) {
        return Err(Error::param("accuracy_threshold", "must lie in (0.5, 1)"));
    }
    if cfg.run_length == 0 {
        return Err(Error::param("run_length", "must be at least 1"));
    }
    Ok(
        match first_run(truth_accuracy, cfg.run_length, |v| v > cfg.accuracy_threshold) {
            Some(i) => EventTime {
                time: i as i64,
                censored: false,
            },
            None => EventTime {
                time: truth_accuracy.len() as i64,
                censored: true,
            },
        },
    )
}

/// Windows and divisor for the baseline-corrected positive area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugPosConfig {
    /// Inclusive baseline window, in curve time units (default −8..=−1).
    pub baseline: (i64, i64),
    /// Inclusive post window (default 0..=25).
    pub post: (i64, i64),
    /// Divisor of the summed positive part (default 25).
    pub divisor: f64,
}

impl Default for AugPosConfig {
    fn default() -> Self {
        AugPosConfig {
            baseline: (-8, -1),
            post: (0, 25),
            divisor: 25.0,
        }
    }
}

fn window_values(curve: &GapCurve, (lo, hi): (i64, i64)) -> Vec<f64> {
    curve
        .times
        .iter()
        .zip(&curve.values)
        .filter(|(t, _)| (lo..=hi).contains(*t))
        .map(|(_, v)| *v)
        .collect()
}

/// `(1/divisor) * sum_{t in post} max(0, gap(t) - mean(gap over baseline))`.
///
/// Points missing from the post window contribute nothing; each window needs at
/// least one point.
pub fn aug_pos(curve: &GapCurve, cfg: &AugPosConfig) -> Result<f64> {
    let base = window_values(curve, cfg.baseline);
    if base.is_empty() {
        return Err(Error::MissingWindow(format!(
            "no points in baseline window {:?}",
            cfg.baseline
        )));
    }
    let post = window_values(curve, cfg.post);
    if post.is_empty() {
        return Err(Error::MissingWindow(format!("no points in post window {:?}", cfg.post)));
    }
    let baseline = base.iter().sum::<f64>() / base.len() as f64;
    Ok(post.iter().map(|v| (v - baseline).max(0.0)).sum::<f64>() / cfg.divisor)
}

/// One post-first trial: whether the choice repeated the previous one, and whether
/// the previous trial was rewarded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChoiceStep {
    pub repeated: bool,
    pub previous_reward: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ChoiceSequence(pub Vec<ChoiceStep>);

impl ChoiceSequence {
    /// Builds the sequence from raw choices and rewards; the first trial has no
    /// predecessor and is dropped.
    pub fn from_trials(choices: &[u8], rewards: &[u8]) -> Result<Self> {
        if choices.len() != rewards.len() {
            return Err(Error::Mismatch("choices and rewards differ in length".into()));
        }
        Ok(ChoiceSequence(
            (1..choices.len())
                .map(|i| ChoiceStep {
                    repeated: choices[i] == choices[i - 1],
                    previous_reward: rewards[i - 1] != 0,
                })
                .collect(),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Commitment {
    pub win_stay: f64,
    pub lose_shift: f64,
    pub commitment: f64,
}

impl Commitment {
    pub fn from_rates(win_stay: f64, lose_shift: f64) -> Self {
        Commitment {
            win_stay,
            lose_shift,
            commitment: win_stay - lose_shift,
        }
    }
}

/// Win-stay, lose-shift, and their difference.
pub fn commitment(seq: &ChoiceSequence) -> Result<Commitment> {
    let (mut wins, mut stays, mut losses, mut shifts) = (0u64, 0u64, 0u64, 0u64);
    for s in &seq.0 {
        if s.previous_reward {
            wins += 1;
            stays += s.repeated as u64;
        } else {
            losses += 1;
            shifts += !s.repeated as u64;
        }
    }
    if wins == 0 {
        return Err(Error::UndefinedClass("win"));
    }
    if losses == 0 {
        return Err(Error::UndefinedClass("loss"));
    }
    Ok(Commitment::from_rates(
        stays as f64 / wins as f64,
        shifts as f64 / losses as f64,
    ))
}

/// Discrete Gaussian smoothing truncated at ±4σ, renormalized where the kernel
/// runs off either end of the series.
pub fn gaussian_smooth(series: &[f64], sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::param("sigma", "must be positive"));
    }
    let radius = (4.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|k| (-(k as f64).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let n = series.len() as isize;
    Ok((0..n)
        .map(|i| {
            let mut acc = 0.0;
            let mut wsum = 0.0;
            for (j, w) in (-radius..=radius).zip(&kernel) {
                let idx = i + j;
                if (0..n).contains(&idx) {
                    acc += w * series[idx as usize];
                    wsum += w;
                }
            }
            acc / wsum
        })
        .collect())
}

/// Centered moving mean over `window` points (positions `i - window/2 ..= i + (window-1)/2`),
/// shrunk at the boundaries.
pub fn rolling_mean(series: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::param("window", "must be at least 1"));
    }
    let n = series.len();
    let back = window / 2;
    let fwd = (window - 1) / 2;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in series {
        prefix.push(prefix.last().unwrap() + v);
    }
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(back);
            let hi = (i + fwd).min(n - 1);
            (prefix[hi + 1] - prefix[lo]) / (hi + 1 - lo) as f64
        })
        .collect())
}

/// Rolling accuracy of a 0/1 indicator series.
pub fn rolling_accuracy(indicators: &[u8], window: usize) -> Result<Vec<f64>> {
    let xs: Vec<f64> = indicators.iter().map(|&b| b as f64).collect();
    rolling_mean(&xs, window)
}
