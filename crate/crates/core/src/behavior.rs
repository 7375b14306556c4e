//! Two-option reversal-learning data: loading, reversal detection, reversal-locked
//! gap curves and subject/group summaries.

use std::collections::HashMap;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt;
use crate::metrics::{self, aug_pos, gaussian_smooth, recovery_t, rolling_mean, AugPosConfig, EventTime, GapCurve, RecoveryConfig};
use crate::stats::{self, Sided, TestResult};

pub const TRIAL_HEADER: [&str; 5] = ["subject_id", "trial_index", "choice", "reward", "better_option"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub subject_id: String,
    pub trial_index: u64,
    pub choice: u8,
    pub reward: u8,
    pub better_option: u8,
}

impl TrialRecord {
    pub fn chose_better(&self) -> bool {
        self.choice == self.better_option
    }
}

fn binary_field(raw: &str, row: u64, column: &str) -> Result<u8> {
    match raw.trim() {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(Error::Parse {
            row,
            column: column.into(),
            reason: format!("expected 0 or 1, found `{other}`"),
        }),
    }
}

/// Reads trial CSV with the exact header `subject_id,trial_index,choice,reward,better_option`.
///
/// Records come back grouped by subject (first-appearance order) and sorted by
/// `trial_index` within each subject. Rows are numbered from 1 after the header.
pub fn load_trials<R: Read>(input: R) -> Result<Vec<TrialRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().map(str::trim).ne(TRIAL_HEADER.iter().copied()) {
        return Err(Error::Schema(format!(
            "expected header `{}`, found `{}`",
            TRIAL_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<(u64, TrialRecord)>> = HashMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i as u64 + 1;
        if rec.len() != TRIAL_HEADER.len() {
            return Err(Error::Parse {
                row,
                column: "*".into(),
                reason: format!("expected {} fields, found {}", TRIAL_HEADER.len(), rec.len()),
            });
        }
        let subject_id = rec[0].trim().to_string();
        if subject_id.is_empty() {
            return Err(Error::Parse {
                row,
                column: "subject_id".into(),
                reason: "empty subject id".into(),
            });
        }
        let trial_index = rec[1].trim().parse::<u64>().map_err(|e| Error::Parse {
            row,
            column: "trial_index".into(),
            reason: e.to_string(),
        })?;
        let record = TrialRecord {
            trial_index,
            choice: binary_field(&rec[2], row, "choice")?,
            reward: binary_field(&rec[3], row, "reward")?,
            better_option: binary_field(&rec[4], row, "better_option")?,
            subject_id,
        };
        groups
            .entry(record.subject_id.clone())
            .or_insert_with(|| {
                order.push(record.subject_id.clone());
                Vec::new()
            })
            .push((row, record));
    }
    let mut out = Vec::new();
    for id in order {
        let mut rows = groups.remove(&id).unwrap_or_default();
        rows.sort_by_key(|(_, r)| r.trial_index);
        if let Some(w) = rows.windows(2).find(|w| w[0].1.trial_index == w[1].1.trial_index) {
            return Err(Error::Ordering(format!(
                "subject `{id}` repeats trial_index {} (rows {} and {})",
                w[1].1.trial_index, w[0].0, w[1].0
            )));
        }
        out.extend(rows.into_iter().map(|(_, r)| r));
    }
    Ok(out)
}

pub fn write_trials<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRIAL_HEADER)?;
    for r in records {
        w.write_record([
            r.subject_id.clone(),
            r.trial_index.to_string(),
            r.choice.to_string(),
            r.reward.to_string(),
            r.better_option.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Splits grouped records into per-subject runs of consecutive equal `subject_id`.
pub fn subjects(records: &[TrialRecord]) -> Vec<&[TrialRecord]> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=records.len() {
        if i == records.len() || records[i].subject_id != records[start].subject_id {
            if i > start {
                out.push(&records[start..i]);
            }
            start = i;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReversalEvent {
    pub subject_id: String,
    /// Position of the first post-reversal trial within the subject's records.
    pub position: usize,
    pub trial_index: u64,
    pub pre_better: u8,
    pub post_better: u8,
}

/// One event per change of `better_option` between consecutive trials.
pub fn detect_reversals(trials: &[TrialRecord]) -> Vec<ReversalEvent> {
    trials
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0].better_option != w[1].better_option)
        .map(|(i, w)| ReversalEvent {
            subject_id: w[1].subject_id.clone(),
            position: i + 1,
            trial_index: w[1].trial_index,
            pre_better: w[0].better_option,
            post_better: w[1].better_option,
        })
        .collect()
}

/// Fraction of trials whose reward contradicts the choice's quality: the better
/// option went unrewarded or the worse option was rewarded.
pub fn empirical_noise_rate(trials: &[TrialRecord]) -> Result<f64> {
    if trials.is_empty() {
        return Err(Error::Empty("noise rate of an empty trial list"));
    }
    let contradictions = trials.iter().filter(|t| t.chose_better() != (t.reward == 1)).count();
    Ok(contradictions as f64 / trials.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Smoothing {
    Gaussian { sigma: f64 },
    Rolling { window: usize },
    None,
}

impl Default for Smoothing {
    fn default() -> Self {
        Smoothing::Gaussian { sigma: 2.0 }
    }
}

impl Smoothing {
    pub fn apply(&self, series: &[f64]) -> Result<Vec<f64>> {
        match *self {
            Smoothing::Gaussian { sigma } => gaussian_smooth(series, sigma),
            Smoothing::Rolling { window } => rolling_mean(series, window),
            Smoothing::None => Ok(series.to_vec()),
        }
    }
}

/// Which option counts as correct when scoring truth accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthReference {
    /// The option that is better on that trial.
    #[default]
    Current,
    /// The event's post-reversal better option, on both sides of the reversal.
    PostReversal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GapConfig {
    /// Inclusive window relative to the reversal.
    pub window: (i64, i64),
    pub smoothing: Smoothing,
    pub truth: TruthReference,
    pub aug: AugPosConfig,
    pub recovery: RecoveryConfig,
}

impl Default for GapConfig {
    fn default() -> Self {
        GapConfig {
            window: (-8, 25),
            smoothing: Smoothing::default(),
            truth: TruthReference::default(),
            aug: AugPosConfig::default(),
            recovery: RecoveryConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectGapSummary {
    pub subject_id: String,
    pub n_trials: usize,
    pub n_events: usize,
    /// Event-averaged feedback-minus-truth curve over the window.
    pub curve: GapCurve,
    /// Event-averaged truth accuracy over the window.
    pub truth_curve: GapCurve,
    pub aug_pos: f64,
    pub t_star: EventTime,
    pub noise_rate: f64,
}

struct EventSeries {
    start: i64,
    gap: Vec<f64>,
    truth: Vec<f64>,
}

fn event_series(trials: &[TrialRecord], ev: &ReversalEvent, next: Option<usize>, cfg: &GapConfig) -> Result<EventSeries> {
    let p = ev.position as i64;
    let lo = (p + cfg.window.0).max(0);
    let mut hi = (p + cfg.window.1).min(trials.len() as i64 - 1);
    if let Some(n) = next {
        hi = hi.min(n as i64 - 1);
    }
    let seg = &trials[lo as usize..=hi as usize];
    let feedback: Vec<f64> = seg.iter().map(|t| f64::from(t.reward)).collect();
    let truth: Vec<f64> = seg
        .iter()
        .map(|t| {
            let correct = match cfg.truth {
                TruthReference::Current => t.better_option,
                TruthReference::PostReversal => ev.post_better,
            };
            f64::from(u8::from(t.choice == correct))
        })
        .collect();
    let feedback = cfg.smoothing.apply(&feedback)?;
    let truth = cfg.smoothing.apply(&truth)?;
    let gap = feedback.iter().zip(&truth).map(|(f, t)| f - t).collect();
    Ok(EventSeries {
        start: lo - p,
        gap,
        truth,
    })
}

fn average_by_time(series: &[(i64, &[f64])], window: (i64, i64)) -> Result<GapCurve> {
    let width = (window.1 - window.0 + 1) as usize;
    let mut sum = vec![0.0; width];
    let mut count = vec![0usize; width];
    for &(start, values) in series {
        for (k, v) in values.iter().enumerate() {
            let slot = (start + k as i64 - window.0) as usize;
            sum[slot] += v;
            count[slot] += 1;
        }
    }
    let (times, values) = (0..width)
        .filter(|&i| count[i] > 0)
        .map(|i| (window.0 + i as i64, sum[i] / count[i] as f64))
        .unzip();
    GapCurve::new(times, values)
}

/// Reversal-locked summary of one subject's sorted trials.
///
/// Each event contributes the trials in the window, stopping before the next
/// reversal. Both indicators are smoothed within the event, events are averaged
/// per relative trial, and `aug_pos` and recovery are taken from the averages.
pub fn reversal_locked_gap(trials: &[TrialRecord], cfg: &GapConfig) -> Result<SubjectGapSummary> {
    if cfg.window.0 >= 0 || cfg.window.1 < 0 {
        return Err(Error::param("window", "must straddle the reversal"));
    }
    let subject_id = trials.first().map(|t| t.subject_id.clone()).ok_or(Error::Empty("subject has no trials"))?;
    if trials.windows(2).any(|w| w[1].trial_index <= w[0].trial_index) {
        return Err(Error::Ordering(format!("trials of `{subject_id}` are not sorted")));
    }
    let events = detect_reversals(trials);
    if events.is_empty() {
        return Err(Error::InsufficientData(format!("subject `{subject_id}` has no reversals")));
    }
    let series = events
        .iter()
        .enumerate()
        .map(|(i, ev)| event_series(trials, ev, events.get(i + 1).map(|e| e.position), cfg))
        .collect::<Result<Vec<_>>>()?;
    let gaps: Vec<(i64, &[f64])> = series.iter().map(|s| (s.start, s.gap.as_slice())).collect();
    let truths: Vec<(i64, &[f64])> = series.iter().map(|s| (s.start, s.truth.as_slice())).collect();
    let curve = average_by_time(&gaps, cfg.window)?;
    let truth_curve = average_by_time(&truths, cfg.window)?;
    let post_truth: Vec<f64> = truth_curve
        .times()
        .iter()
        .zip(truth_curve.values())
        .filter(|(t, _)| **t >= 0)
        .map(|(_, v)| *v)
        .collect();
    Ok(SubjectGapSummary {
        subject_id,
        n_trials: trials.len(),
        n_events: events.len(),
        aug_pos: aug_pos(&curve, &cfg.aug)?,
        t_star: recovery_t(&post_truth, &cfg.recovery)?,
        noise_rate: empirical_noise_rate(trials)?,
        curve,
        truth_curve,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub subject_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub n_subjects: usize,
    pub n_events: usize,
    pub mean_aug_pos: f64,
    /// One-sample t-test of `aug_pos` against 0, with Cohen's d; absent below 2 subjects.
    pub aug_pos_test: Option<TestResult>,
    pub aug_pos_bootstrap_ci: Option<(f64, f64)>,
    pub fraction_positive: f64,
    /// Censored recovery times enter at their censoring value.
    pub mean_t_star: f64,
    pub recovered_fraction: f64,
    pub mean_noise_rate: f64,
    pub mean_commitment: Option<f64>,
    /// Unweighted across-subject mean of the subject curves.
    pub mean_curve: GapCurve,
    pub skipped: Vec<Skipped>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortAnalysis {
    pub subjects: Vec<SubjectGapSummary>,
    pub group: GroupSummary,
}

/// Analyzes every subject (in parallel) and pools the summaries. Subjects
/// without a usable reversal are reported in `skipped`.
pub fn analyze_cohort(records: &[TrialRecord], cfg: &GapConfig, bootstrap_seed: u64) -> Result<CohortAnalysis> {
    let groups = subjects(records);
    let results: Vec<(String, Result<SubjectGapSummary>, Option<f64>)> = groups
        .par_iter()
        .map(|trials| {
            let choices: Vec<u8> = trials.iter().map(|t| t.choice).collect();
            let rewards: Vec<u8> = trials.iter().map(|t| t.reward).collect();
            let commitment = metrics::ChoiceSequence::from_trials(&choices, &rewards)
                .and_then(|s| metrics::commitment(&s))
                .ok()
                .map(|c| c.commitment);
            (trials[0].subject_id.clone(), reversal_locked_gap(trials, cfg), commitment)
        })
        .collect();
    let mut summaries = Vec::new();
    let mut skipped = Vec::new();
    let mut commitments = Vec::new();
    for (id, res, c) in results {
        match res {
            Ok(s) => {
                summaries.push(s);
                commitments.extend(c);
            }
            Err(e @ (Error::InsufficientData(_) | Error::MissingWindow(_))) => skipped.push(Skipped {
                subject_id: id,
                reason: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    if summaries.is_empty() {
        return Err(Error::InsufficientData("no subject has a usable reversal".into()));
    }
    let group = group_summary(&summaries, &commitments, cfg, bootstrap_seed, skipped)?;
    Ok(CohortAnalysis {
        subjects: summaries,
        group,
    })
}

fn group_summary(
    subjects: &[SubjectGapSummary],
    commitments: &[f64],
    cfg: &GapConfig,
    seed: u64,
    skipped: Vec<Skipped>,
) -> Result<GroupSummary> {
    let augs: Vec<f64> = subjects.iter().map(|s| s.aug_pos).collect();
    let n = augs.len() as f64;
    let aug_pos_test = if augs.len() >= 2 {
        match stats::one_sample_t(&augs, 0.0, Sided::Two) {
            Ok(t) => Some(t),
            Err(Error::DegenerateVariance(_)) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let aug_pos_bootstrap_ci = if augs.len() >= 2 {
        Some(stats::bootstrap_mean_ci(&augs, 2000, 0.95, seed)?)
    } else {
        None
    };
    let curves: Vec<(i64, &[f64])> = subjects
        .iter()
        .map(|s| (s.curve.times()[0], s.curve.values()))
        .collect();
    Ok(GroupSummary {
        n_subjects: subjects.len(),
        n_events: subjects.iter().map(|s| s.n_events).sum(),
        mean_aug_pos: stats::mean(&augs),
        aug_pos_test,
        aug_pos_bootstrap_ci,
        fraction_positive: augs.iter().filter(|a| **a > 0.0).count() as f64 / n,
        mean_t_star: subjects.iter().map(|s| s.t_star.time as f64).sum::<f64>() / n,
        recovered_fraction: subjects.iter().filter(|s| !s.t_star.censored).count() as f64 / n,
        mean_noise_rate: subjects.iter().map(|s| s.noise_rate).sum::<f64>() / n,
        mean_commitment: (!commitments.is_empty()).then(|| stats::mean(commitments)),
        mean_curve: average_by_time(&curves, cfg.window)?,
        skipped,
    })
}

/// Writes `subject_id,aug_pos,t_star,censored,noise_rate`.
pub fn write_group_csv<W: Write>(subjects: &[SubjectGapSummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["subject_id", "aug_pos", "t_star", "censored", "noise_rate"])?;
    for s in subjects {
        w.write_record([
            s.subject_id.clone(),
            fmt::float(s.aug_pos),
            s.t_star.time.to_string(),
            s.t_star.censored.to_string(),
            fmt::float(s.noise_rate),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial(id: &str, i: u64, choice: u8, reward: u8, better: u8) -> TrialRecord {
        TrialRecord {
            subject_id: id.into(),
            trial_index: i,
            choice,
            reward,
            better_option: better,
        }
    }

    fn from_better(better: &[u8]) -> Vec<TrialRecord> {
        better.iter().enumerate().map(|(i, &b)| trial("s", i as u64, b, 1, b)).collect()
    }

    #[test]
    fn load_empty_and_bad_rows() {
        let empty = "subject_id,trial_index,choice,reward,better_option\n";
        assert!(load_trials(empty.as_bytes()).unwrap().is_empty());
        let bad = "subject_id,trial_index,choice,reward,better_option\na,0,1,1,1\na,1,2,0,1\n";
        match load_trials(bad.as_bytes()) {
            Err(Error::Parse { row, column, .. }) => assert_eq!((row, column.as_str()), (2, "choice")),
            other => panic!("{other:?}"),
        }
        let missing = "subject_id,trial_index,choice,reward\n";
        assert!(matches!(load_trials(missing.as_bytes()), Err(Error::Schema(_))));
        let dup = "subject_id,trial_index,choice,reward,better_option\na,3,1,1,1\na,3,0,0,1\n";
        assert!(matches!(load_trials(dup.as_bytes()), Err(Error::Ordering(_))));
    }

    #[test]
    fn load_groups_and_sorts() {
        let text = "subject_id,trial_index,choice,reward,better_option\nb,5,0,1,0\na,2,1,0,1\nb,1,1,1,0\na,0,0,0,1\n";
        let recs = load_trials(text.as_bytes()).unwrap();
        let ids: Vec<(&str, u64)> = recs.iter().map(|r| (r.subject_id.as_str(), r.trial_index)).collect();
        assert_eq!(ids, [("b", 1), ("b", 5), ("a", 0), ("a", 2)]);
        assert_eq!(subjects(&recs).len(), 2);
        let mut buf = Vec::new();
        write_trials(&recs, &mut buf).unwrap();
        assert_eq!(load_trials(buf.as_slice()).unwrap(), recs);
    }

    #[test]
    fn reversal_scan() {
        assert!(detect_reversals(&from_better(&[1, 1, 1])).is_empty());
        let pos: Vec<usize> = detect_reversals(&from_better(&[0, 0, 1, 1, 0])).iter().map(|e| e.position).collect();
        assert_eq!(pos, [2, 4]);
    }

    #[test]
    fn noise_rate_cases() {
        assert_eq!(empirical_noise_rate(&from_better(&[0, 1, 0])).unwrap(), 0.0);
        let t = vec![trial("s", 0, 1, 0, 1), trial("s", 1, 0, 1, 1), trial("s", 2, 1, 1, 1), trial("s", 3, 0, 0, 1)];
        assert_eq!(empirical_noise_rate(&t).unwrap(), 0.5);
        assert!(empirical_noise_rate(&[]).is_err());
    }

    #[test]
    fn perfect_agent_has_zero_gap() {
        let mut better = vec![0u8; 40];
        better.extend([1u8; 40]);
        better.extend([0u8; 40]);
        let s = reversal_locked_gap(&from_better(&better), &GapConfig::default()).unwrap();
        assert!(s.curve.values().iter().all(|v| v.abs() < 1e-12));
        assert_eq!(s.aug_pos, 0.0);
        assert_eq!(s.n_events, 2);
        assert_eq!(s.curve.times().first(), Some(&-8));
        assert_eq!(s.curve.times().last(), Some(&25));
        assert!(!s.t_star.censored);
        assert_eq!(s.t_star.time, 0);
    }

    #[test]
    fn perseverating_agent_has_positive_gap() {
        // keeps choosing the old option for 6 trials, rewarded by noise half the time
        let mut t = Vec::new();
        for i in 0..60u64 {
            let better = u8::from(i >= 30);
            let choice = if (30..36).contains(&i) { 0 } else { better };
            let reward = if choice == better { u8::from(i % 4 != 0) } else { u8::from(i % 2 == 0) };
            t.push(trial("s", i, choice, reward, better));
        }
        let s = reversal_locked_gap(&t, &GapConfig::default()).unwrap();
        assert!(s.aug_pos > 0.0, "{}", s.aug_pos);
    }

    #[test]
    fn next_reversal_masks_window() {
        let mut better = vec![0u8; 20];
        better.extend([1u8; 10]);
        better.extend([0u8; 30]);
        let recs = from_better(&better);
        let s = reversal_locked_gap(&recs, &GapConfig::default()).unwrap();
        // first event covers relative 0..=9 only, the second covers the whole window
        assert_eq!(s.n_events, 2);
        assert_eq!(s.curve.len(), 34);
    }

    #[test]
    fn no_reversal_is_an_error() {
        assert!(matches!(
            reversal_locked_gap(&from_better(&[1; 30]), &GapConfig::default()),
            Err(Error::InsufficientData(_))
        ));
    }
}
