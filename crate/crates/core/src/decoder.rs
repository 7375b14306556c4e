//! Cross-validated logistic decoders over precomputed trial features.
//!
//! Each (subject, task) block gets two decoders, one for the feedback label and
//! one for the truth label. Their held-out probabilities give a per-trial neural
//! gap, and the positive part of that gap is averaged into a neural `aug_pos`.

use std::collections::HashMap;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::rolling_mean;
use crate::stats::{self, TestResult};
use crate::{fmt, rng};

/// Probabilities are clipped to `[PROB_CLIP, 1 - PROB_CLIP]` before taking logs.
pub const PROB_CLIP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub trial_index: u64,
    pub features: Vec<f64>,
    pub label_feedback: u8,
    pub label_truth: u8,
}

/// All trials of one subject in one task, sorted by `trial_index`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBlock {
    pub subject_id: String,
    pub task: String,
    pub rows: Vec<FeatureRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub feature_names: Vec<String>,
    pub blocks: Vec<FeatureBlock>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Feedback,
    Truth,
}

impl FeatureRow {
    pub fn label(&self, which: Label) -> u8 {
        match which {
            Label::Feedback => self.label_feedback,
            Label::Truth => self.label_truth,
        }
    }
}

impl FeatureBlock {
    pub fn labels(&self, which: Label) -> Vec<u8> {
        self.rows.iter().map(|r| r.label(which)).collect()
    }
}

impl FeatureTable {
    /// Reads `subject_id,task,trial_index,<features...>,label_feedback,label_truth`.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(input);
        let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let n = header.len();
        if n < 6
            || header[..3] != ["subject_id", "task", "trial_index"]
            || header[n - 2..] != ["label_feedback", "label_truth"]
        {
            return Err(Error::Schema(format!(
                "expected `subject_id,task,trial_index,<features...>,label_feedback,label_truth`, found `{}`",
                header.join(",")
            )));
        }
        let feature_names = header[3..n - 2].to_vec();
        if let Some(dup) = feature_names.iter().enumerate().find(|(i, f)| feature_names[..*i].contains(f)) {
            return Err(Error::Schema(format!("duplicate feature column `{}`", dup.1)));
        }
        let mut order: Vec<(String, String)> = Vec::new();
        let mut groups: HashMap<(String, String), Vec<(u64, FeatureRow)>> = HashMap::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row = i as u64 + 1;
            let err = |column: &str, reason: String| Error::Parse {
                row,
                column: column.into(),
                reason,
            };
            if rec.len() != n {
                return Err(err("*", format!("expected {n} fields, found {}", rec.len())));
            }
            let subject = rec[0].trim().to_string();
            if subject.is_empty() {
                return Err(err("subject_id", "empty subject id".into()));
            }
            let task = rec[1].trim().to_string();
            let trial_index = rec[2].trim().parse::<u64>().map_err(|e| err("trial_index", e.to_string()))?;
            let mut features = Vec::with_capacity(feature_names.len());
            for (j, name) in feature_names.iter().enumerate() {
                let v: f64 = rec[3 + j].trim().parse().map_err(|e| err(name, format!("{e}")))?;
                if !v.is_finite() {
                    return Err(err(name, "non-finite value".into()));
                }
                features.push(v);
            }
            let label = |k: usize, name: &str| match rec[k].trim() {
                "0" => Ok(0u8),
                "1" => Ok(1u8),
                other => Err(err(name, format!("expected 0 or 1, found `{other}`"))),
            };
            let r = FeatureRow {
                trial_index,
                features,
                label_feedback: label(n - 2, "label_feedback")?,
                label_truth: label(n - 1, "label_truth")?,
            };
            let key = (subject, task);
            groups
                .entry(key.clone())
                .or_insert_with(|| {
                    order.push(key);
                    Vec::new()
                })
                .push((row, r));
        }
        let mut blocks = Vec::with_capacity(order.len());
        for key in order {
            let mut rows = groups.remove(&key).unwrap_or_default();
            rows.sort_by_key(|(_, r)| r.trial_index);
            if let Some(w) = rows.windows(2).find(|w| w[0].1.trial_index == w[1].1.trial_index) {
                return Err(Error::Ordering(format!(
                    "subject `{}` task `{}` repeats trial_index {} (rows {} and {})",
                    key.0, key.1, w[1].1.trial_index, w[0].0, w[1].0
                )));
            }
            blocks.push(FeatureBlock {
                subject_id: key.0,
                task: key.1,
                rows: rows.into_iter().map(|(_, r)| r).collect(),
            });
        }
        Ok(FeatureTable { feature_names, blocks })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["subject_id".to_string(), "task".into(), "trial_index".into()];
        header.extend(self.feature_names.iter().cloned());
        header.extend(["label_feedback".to_string(), "label_truth".into()]);
        w.write_record(&header)?;
        for b in &self.blocks {
            for r in &b.rows {
                let mut rec = vec![b.subject_id.clone(), b.task.clone(), r.trial_index.to_string()];
                rec.extend(r.features.iter().map(|v| fmt::float(*v)));
                rec.extend([r.label_feedback.to_string(), r.label_truth.to_string()]);
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Standardizes every block independently.
    pub fn zscore(&self) -> Result<FeatureTable> {
        Ok(FeatureTable {
            feature_names: self.feature_names.clone(),
            blocks: self.blocks.iter().map(zscore).collect::<Result<_>>()?,
        })
    }
}

/// Centers each feature column and divides by its sample SD; constant columns become 0.
pub fn zscore(block: &FeatureBlock) -> Result<FeatureBlock> {
    let n = block.rows.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "z-scoring `{}`/`{}` needs at least 2 trials",
            block.subject_id, block.task
        )));
    }
    let d = block.rows[0].features.len();
    let mut out = block.clone();
    for j in 0..d {
        let col: Vec<f64> = block.rows.iter().map(|r| r.features[j]).collect();
        let m = stats::mean(&col);
        let sd = stats::sample_sd(&col);
        let constant = col.iter().all(|v| *v == col[0]) || !(sd > 0.0);
        for (r, v) in out.rows.iter_mut().zip(&col) {
            r.features[j] = if constant { 0.0 } else { (v - m) / sd };
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    pub k: usize,
    /// L2 penalty on the weights (the intercept is not penalized).
    pub lambda: f64,
    pub seed: u64,
    pub max_retries: usize,
    pub max_iter: usize,
    /// Stop when the gradient's max-norm falls below this.
    pub tol: f64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            k: 3,
            lambda: 0.01,
            seed: 0,
            max_retries: 20,
            max_iter: 20_000,
            tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogisticModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        sigmoid(self.intercept + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
    }
}

/// Minimizes mean log-loss plus `lambda/2 * |w|^2` by gradient descent with step
/// `1/L`, `L` bounding the gradient's Lipschitz constant.
pub fn fit_logistic(xs: &[&[f64]], ys: &[u8], lambda: f64, max_iter: usize, tol: f64) -> Result<LogisticModel> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(Error::Mismatch("feature rows and labels differ in length".into()));
    }
    if !(lambda >= 0.0) {
        return Err(Error::param("lambda", "must be non-negative"));
    }
    let n = xs.len() as f64;
    let d = xs[0].len();
    let frob: f64 = xs.iter().map(|x| 1.0 + x.iter().map(|v| v * v).sum::<f64>()).sum::<f64>();
    let lipschitz = frob / (4.0 * n) + lambda;
    let step = 1.0 / lipschitz;
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut gw = vec![0.0; d];
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..max_iter {
        iterations = it + 1;
        gw.iter_mut().for_each(|g| *g = 0.0);
        let mut gb = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            let z = b + w.iter().zip(x.iter()).map(|(a, v)| a * v).sum::<f64>();
            let r = sigmoid(z) - f64::from(y);
            gb += r;
            for (g, v) in gw.iter_mut().zip(x.iter()) {
                *g += r * v;
            }
        }
        gb /= n;
        for (g, wj) in gw.iter_mut().zip(&w) {
            *g = *g / n + lambda * wj;
        }
        let gmax = gw.iter().fold(gb.abs(), |m, g| m.max(g.abs()));
        if !gmax.is_finite() {
            return Err(Error::Divergence {
                epoch: it,
                detail: "non-finite logistic gradient".into(),
            });
        }
        if gmax < tol {
            converged = true;
            break;
        }
        b -= step * gb;
        for (wj, g) in w.iter_mut().zip(&gw) {
            *wj -= step * g;
        }
    }
    Ok(LogisticModel {
        weights: w,
        intercept: b,
        iterations,
        converged,
    })
}

/// Held-out probabilities of one decoder with the fold bookkeeping behind them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderOutput {
    pub label: Label,
    pub trial_index: Vec<u64>,
    pub probabilities: Vec<f64>,
    /// Test fold of each trial.
    pub folds: Vec<usize>,
    /// Fold whose model produced each probability.
    pub scored_by: Vec<usize>,
    /// Row positions each fold model was trained on.
    pub train_rows: Vec<Vec<usize>>,
    pub converged: bool,
}

impl DecoderOutput {
    /// Every trial scored exactly once, by a model whose training rows exclude it.
    pub fn check_hygiene(&self) -> bool {
        let n = self.trial_index.len();
        if self.probabilities.len() != n || self.folds.len() != n || self.scored_by.len() != n {
            return false;
        }
        let mut in_train = vec![vec![false; n]; self.train_rows.len()];
        for (f, rows) in self.train_rows.iter().enumerate() {
            for &r in rows {
                if r >= n {
                    return false;
                }
                in_train[f][r] = true;
            }
        }
        let mut scored = vec![0usize; n];
        for (i, &f) in self.scored_by.iter().enumerate() {
            if f != self.folds[i] || f >= self.train_rows.len() || in_train[f][i] {
                return false;
            }
            scored[i] += 1;
        }
        scored.iter().all(|&c| c == 1) && self.probabilities.iter().all(|p| (0.0..=1.0).contains(p))
    }
}

/// Stratified shuffled assignment of `labels` to `k` folds.
pub fn stratified_folds<R: Rng + ?Sized>(labels: &[u8], k: usize, rng: &mut R) -> Vec<usize> {
    let mut folds = vec![0; labels.len()];
    let mut next = 0;
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(rng);
        for i in idx {
            folds[i] = next % k;
            next += 1;
        }
    }
    folds
}

fn folds_usable(labels: &[u8], folds: &[usize], k: usize) -> bool {
    (0..k).all(|f| {
        let test = folds.iter().any(|&g| g == f);
        let train: Vec<u8> = labels.iter().zip(folds).filter(|(_, &g)| g != f).map(|(l, _)| *l).collect();
        test && train.contains(&0) && train.contains(&1)
    })
}

/// k-fold cross-validated logistic decoder of `label` from the block's features.
pub fn train_cv(block: &FeatureBlock, label: Label, cfg: &CvConfig) -> Result<DecoderOutput> {
    let n = block.rows.len();
    if cfg.k < 2 {
        return Err(Error::param("k", "need at least 2 folds"));
    }
    if n < cfg.k {
        return Err(Error::InsufficientData(format!("{n} trials for {} folds", cfg.k)));
    }
    let labels = block.labels(label);
    let mut g = rng::stream(cfg.seed);
    let mut folds = None;
    for _ in 0..=cfg.max_retries {
        let f = stratified_folds(&labels, cfg.k, &mut g);
        if folds_usable(&labels, &f, cfg.k) {
            folds = Some(f);
            break;
        }
    }
    let folds = folds.ok_or_else(|| {
        Error::SingleClass(format!(
            "`{}`/`{}`: no fold split leaves both {:?} classes in every training set",
            block.subject_id, block.task, label
        ))
    })?;
    let mut probabilities = vec![f64::NAN; n];
    let mut scored_by = vec![usize::MAX; n];
    let mut train_rows = Vec::with_capacity(cfg.k);
    let mut converged = true;
    for f in 0..cfg.k {
        let train: Vec<usize> = (0..n).filter(|&i| folds[i] != f).collect();
        let xs: Vec<&[f64]> = train.iter().map(|&i| block.rows[i].features.as_slice()).collect();
        let ys: Vec<u8> = train.iter().map(|&i| labels[i]).collect();
        let model = fit_logistic(&xs, &ys, cfg.lambda, cfg.max_iter, cfg.tol)?;
        converged &= model.converged;
        for i in (0..n).filter(|&i| folds[i] == f) {
            probabilities[i] = model.predict(&block.rows[i].features);
            scored_by[i] = f;
        }
        train_rows.push(train);
    }
    Ok(DecoderOutput {
        label,
        trial_index: block.rows.iter().map(|r| r.trial_index).collect(),
        probabilities,
        folds,
        scored_by,
        train_rows,
        converged,
    })
}

/// Rank-based area under the ROC curve; tied scores count half.
pub fn auroc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Mismatch("scores and labels differ in length".into()));
    }
    let n1 = labels.iter().filter(|&&l| l == 1).count();
    let n0 = labels.len() - n1;
    if n1 == 0 || n0 == 0 {
        return Err(Error::SingleClass("auroc needs both classes".into()));
    }
    let ranks = stats::midranks(scores);
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &l)| l == 1).map(|(r, _)| r).sum();
    let (n1, n0) = (n1 as f64, n0 as f64);
    Ok((rank_sum - n1 * (n1 + 1.0) / 2.0) / (n1 * n0))
}

/// Mean held-out log-loss with probabilities clipped to `[PROB_CLIP, 1 - PROB_CLIP]`.
pub fn log_loss(probabilities: &[f64], labels: &[u8]) -> Result<f64> {
    if probabilities.len() != labels.len() {
        return Err(Error::Mismatch("probabilities and labels differ in length".into()));
    }
    if labels.is_empty() {
        return Err(Error::Empty("log-loss of no trials"));
    }
    let total: f64 = probabilities
        .iter()
        .zip(labels)
        .map(|(p, &y)| {
            let p = p.clamp(PROB_CLIP, 1.0 - PROB_CLIP);
            if y == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    Ok(total / labels.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralGapSeries {
    pub trial_index: Vec<u64>,
    /// `P(feedback positive) - P(truth positive)` per trial.
    pub gap: Vec<f64>,
    /// Mean of `max(0, gap)`.
    pub aug_pos: f64,
}

fn positive_mean(gap: &[f64]) -> f64 {
    if gap.is_empty() {
        return 0.0;
    }
    gap.iter().map(|g| g.max(0.0)).sum::<f64>() / gap.len() as f64
}

pub fn neural_gap(feedback: &DecoderOutput, truth: &DecoderOutput) -> Result<NeuralGapSeries> {
    if feedback.trial_index != truth.trial_index {
        return Err(Error::Mismatch("decoders scored different trials".into()));
    }
    let gap: Vec<f64> = feedback.probabilities.iter().zip(&truth.probabilities).map(|(f, t)| f - t).collect();
    Ok(NeuralGapSeries {
        trial_index: feedback.trial_index.clone(),
        aug_pos: positive_mean(&gap),
        gap,
    })
}

/// Subject-level Spearman correlation between behavioral commitment and neural `aug_pos`.
pub fn cross_modal(commitments: &[f64], neural_augs: &[f64]) -> Result<TestResult> {
    if commitments.len() != neural_augs.len() {
        return Err(Error::Mismatch("commitment and neural series differ in length".into()));
    }
    if commitments.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "cross-modal correlation needs at least 5 subjects, got {}",
            commitments.len()
        )));
    }
    stats::spearman(commitments, neural_augs)
}

/// Within-subject reliability: Pearson r between the gaps of even trials and of
/// the odd trials that follow them, pairing trial `2k` with `2k + 1`.
pub fn split_half(series: &NeuralGapSeries) -> Result<f64> {
    if series.gap.len() < 4 {
        return Err(Error::InsufficientData("split-half needs at least 4 trials".into()));
    }
    let pairs = series.gap.len() / 2;
    let even: Vec<f64> = (0..pairs).map(|k| series.gap[2 * k]).collect();
    let odd: Vec<f64> = (0..pairs).map(|k| series.gap[2 * k + 1]).collect();
    if pairs < 3 {
        // two points always correlate perfectly unless one side is flat
        let (de, d_o) = (even[1] - even[0], odd[1] - odd[0]);
        if de == 0.0 || d_o == 0.0 {
            return Err(Error::DegenerateVariance("split-half input has zero variance"));
        }
        return Ok(de.signum() * d_o.signum());
    }
    Ok(stats::pearson(&even, &odd)?.statistic)
}

/// Across-subject reliability: `aug_pos` from even trials against `aug_pos` from
/// odd trials, Pearson across subjects.
pub fn split_half_cohort(subjects: &[NeuralGapSeries]) -> Result<TestResult> {
    let (even, odd): (Vec<f64>, Vec<f64>) = subjects
        .iter()
        .map(|s| {
            let e: Vec<f64> = s.gap.iter().step_by(2).copied().collect();
            let o: Vec<f64> = s.gap.iter().skip(1).step_by(2).copied().collect();
            (positive_mean(&e), positive_mean(&o))
        })
        .unzip();
    stats::pearson(&even, &odd)
}

/// Pearson correlation after smoothing both series with a centered moving average.
pub fn trial_level_correlation(a: &[f64], b: &[f64], window: usize) -> Result<TestResult> {
    if a.len() != b.len() {
        return Err(Error::Mismatch("trial series differ in length".into()));
    }
    stats::pearson(&rolling_mean(a, window)?, &rolling_mean(b, window)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDecode {
    pub subject_id: String,
    pub task: String,
    pub n_trials: usize,
    pub auroc_feedback: f64,
    pub auroc_truth: f64,
    pub neural_aug_pos: f64,
    pub split_half_r: Option<f64>,
    pub log_loss_feedback: f64,
    pub log_loss_truth: f64,
    pub converged: bool,
    pub hygiene_ok: bool,
    #[serde(skip)]
    pub series: Option<NeuralGapSeries>,
}

/// Z-scores the block, runs both decoders and summarizes the neural gap.
pub fn decode_block(block: &FeatureBlock, cfg: &CvConfig) -> Result<BlockDecode> {
    let z = zscore(block)?;
    let fb = train_cv(&z, Label::Feedback, cfg)?;
    let tr = train_cv(&z, Label::Truth, cfg)?;
    let series = neural_gap(&fb, &tr)?;
    let split_half_r = match split_half(&series) {
        Ok(r) => Some(r),
        Err(Error::InsufficientData(_) | Error::DegenerateVariance(_)) => None,
        Err(e) => return Err(e),
    };
    let (yf, yt) = (z.labels(Label::Feedback), z.labels(Label::Truth));
    Ok(BlockDecode {
        subject_id: block.subject_id.clone(),
        task: block.task.clone(),
        n_trials: block.rows.len(),
        auroc_feedback: auroc(&fb.probabilities, &yf)?,
        auroc_truth: auroc(&tr.probabilities, &yt)?,
        log_loss_feedback: log_loss(&fb.probabilities, &yf)?,
        log_loss_truth: log_loss(&tr.probabilities, &yt)?,
        neural_aug_pos: series.aug_pos,
        split_half_r,
        converged: fb.converged && tr.converged,
        hygiene_ok: fb.check_hygiene() && tr.check_hygiene(),
        series: Some(series),
    })
}

/// Decodes every block in parallel; output order follows the table.
pub fn decode_table(table: &FeatureTable, cfg: &CvConfig) -> Result<Vec<BlockDecode>> {
    table.blocks.par_iter().map(|b| decode_block(b, cfg)).collect()
}

const SLOPE: f64 = 1.0;

/// Synthetic cohort whose neural gap is coupled to behavioral commitment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledCohort {
    pub table: FeatureTable,
    /// Behavioral commitment per block, same order as `table.blocks`.
    pub commitments: Vec<f64>,
}

/// Each subject draws a latent feedback bias `b ~ U(0, 1.5)`. The feedback label
/// follows `sigmoid(b + x0)` and the truth label `sigmoid(x1)` on standard
/// normal features, so a larger bias shifts the feedback decoder's probabilities
/// above the truth decoder's. Commitment is `b / 1.5` plus N(0, noise_sd²).
pub fn synthetic_coupled_cohort(n_subjects: usize, n_trials: usize, n_features: usize, noise_sd: f64, seed: u64) -> Result<CoupledCohort> {
    if n_features < 2 {
        return Err(Error::param("n_features", "need at least 2"));
    }
    let mut blocks = Vec::with_capacity(n_subjects);
    let mut commitments = Vec::with_capacity(n_subjects);
    for s in 0..n_subjects {
        let mut g = rng::sub_stream(seed, s as u64, 0);
        let bias: f64 = g.random_range(0.0..1.5);
        let noise: f64 = StandardNormal.sample(&mut g);
        commitments.push(bias / 1.5 + noise_sd * noise);
        let rows = (0..n_trials)
            .map(|t| {
                let features: Vec<f64> = (0..n_features).map(|_| StandardNormal.sample(&mut g)).collect();
                let pf = sigmoid(bias + SLOPE * features[0]);
                let pt = sigmoid(SLOPE * features[1]);
                FeatureRow {
                    trial_index: t as u64,
                    label_feedback: u8::from(g.random::<f64>() < pf),
                    label_truth: u8::from(g.random::<f64>() < pt),
                    features,
                }
            })
            .collect();
        blocks.push(FeatureBlock {
            subject_id: format!("s{s:03}"),
            task: "rew".into(),
            rows,
        });
    }
    Ok(CoupledCohort {
        table: FeatureTable {
            feature_names: (0..n_features).map(|j| format!("f{j}")).collect(),
            blocks,
        },
        commitments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(rows: Vec<(Vec<f64>, u8, u8)>) -> FeatureBlock {
        FeatureBlock {
            subject_id: "s".into(),
            task: "t".into(),
            rows: rows
                .into_iter()
                .enumerate()
                .map(|(i, (features, f, t))| FeatureRow {
                    trial_index: i as u64,
                    features,
                    label_feedback: f,
                    label_truth: t,
                })
                .collect(),
        }
    }

    #[test]
    fn auroc_examples() {
        let s = [0.1, 0.2, 0.8, 0.9];
        assert_eq!(auroc(&s, &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(auroc(&s, &[1, 1, 0, 0]).unwrap(), 0.0);
        assert_eq!(auroc(&[0.5; 4], &[0, 1, 0, 1]).unwrap(), 0.5);
        assert!(matches!(auroc(&s, &[1; 4]), Err(Error::SingleClass(_))));
    }

    #[test]
    fn log_loss_is_clipped() {
        let l = log_loss(&[0.0, 1.0], &[1, 0]).unwrap();
        assert!((l + PROB_CLIP.ln()).abs() < 1e-9);
        assert!((log_loss(&[0.5], &[1]).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn zscore_columns() {
        let b = block(vec![
            (vec![1.0, 5.0], 0, 0),
            (vec![2.0, 5.0], 1, 1),
            (vec![4.0, 5.0], 0, 1),
            (vec![9.0, 5.0], 1, 0),
        ]);
        let z = zscore(&b).unwrap();
        let col: Vec<f64> = z.rows.iter().map(|r| r.features[0]).collect();
        assert!(stats::mean(&col).abs() < 1e-12);
        assert!((stats::sample_sd(&col) - 1.0).abs() < 1e-12);
        assert!(z.rows.iter().all(|r| r.features[1] == 0.0));
        let again = zscore(&z).unwrap();
        for (a, b) in again.rows.iter().zip(&z.rows) {
            assert!((a.features[0] - b.features[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn logistic_matches_known_optimum() {
        // symmetric data: optimum has zero intercept
        let xs: Vec<Vec<f64>> = vec![vec![-2.0], vec![-1.0], vec![1.0], vec![2.0], vec![-0.5], vec![0.5]];
        let ys = [0, 0, 1, 1, 1, 0];
        let refs: Vec<&[f64]> = xs.iter().map(|v| v.as_slice()).collect();
        let m = fit_logistic(&refs, &ys, 0.01, 100_000, 1e-10).unwrap();
        assert!(m.converged);
        assert!(m.intercept.abs() < 1e-8);
        // stationarity of the penalized objective
        let g: f64 = refs.iter().zip(&ys).map(|(x, &y)| (m.predict(x) - f64::from(y)) * x[0]).sum::<f64>() / 6.0 + 0.01 * m.weights[0];
        assert!(g.abs() < 1e-9);
    }

    #[test]
    fn folds_are_stratified_and_reproducible() {
        let labels: Vec<u8> = (0..30).map(|i| u8::from(i % 3 == 0)).collect();
        let a = stratified_folds(&labels, 3, &mut rng::stream(4));
        let b = stratified_folds(&labels, 3, &mut rng::stream(4));
        assert_eq!(a, b);
        for f in 0..3 {
            let pos = (0..30).filter(|&i| a[i] == f && labels[i] == 1).count();
            assert!((3..=4).contains(&pos));
        }
    }

    #[test]
    fn single_minority_trial_cannot_be_split() {
        let mut rows: Vec<(Vec<f64>, u8, u8)> = (0..9).map(|i| (vec![i as f64], 0, u8::from(i % 2 == 0))).collect();
        rows[0].1 = 1;
        let b = block(rows);
        assert!(matches!(train_cv(&b, Label::Feedback, &CvConfig::default()), Err(Error::SingleClass(_))));
    }

    #[test]
    fn gap_examples() {
        let mk = |label, p: Vec<f64>| DecoderOutput {
            label,
            trial_index: (0..p.len() as u64).collect(),
            folds: vec![0; p.len()],
            scored_by: vec![0; p.len()],
            train_rows: vec![vec![]],
            probabilities: p,
            converged: true,
        };
        let p = vec![0.2, 0.7, 0.9];
        let g = neural_gap(&mk(Label::Feedback, p.clone()), &mk(Label::Truth, p)).unwrap();
        assert_eq!(g.aug_pos, 0.0);
        let g = neural_gap(&mk(Label::Feedback, vec![0.9, 0.1, 0.8]), &mk(Label::Truth, vec![0.5; 3])).unwrap();
        assert!((g.aug_pos - 0.7 / 3.0).abs() < 1e-15);
        let short = mk(Label::Truth, vec![0.5; 2]);
        assert!(neural_gap(&mk(Label::Feedback, vec![0.5; 3]), &short).is_err());
    }

    #[test]
    fn split_half_duplicated_stream() {
        let gap = vec![0.1, 0.1, -0.3, -0.3, 0.5, 0.5, 0.2, 0.2];
        let s = NeuralGapSeries {
            trial_index: (0..8).collect(),
            aug_pos: positive_mean(&gap),
            gap,
        };
        assert!((split_half(&s).unwrap() - 1.0).abs() < 1e-12);
        let short = NeuralGapSeries {
            trial_index: vec![0, 1, 2],
            gap: vec![0.1, 0.2, 0.3],
            aug_pos: 0.2,
        };
        assert!(split_half(&short).is_err());
    }

    #[test]
    fn trial_level_constant_is_degenerate() {
        let a = [0.3; 40];
        let b: Vec<f64> = (0..40).map(|i| i as f64).collect();
        assert!(matches!(trial_level_correlation(&a, &b, 15), Err(Error::DegenerateVariance(_))));
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let c = synthetic_coupled_cohort(2, 5, 3, 0.1, 1).unwrap();
        let mut buf = Vec::new();
        c.table.write_csv(&mut buf).unwrap();
        let back = FeatureTable::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.feature_names, c.table.feature_names);
        assert_eq!(back.blocks.len(), 2);
        for (a, b) in back.blocks.iter().zip(&c.table.blocks) {
            for (ra, rb) in a.rows.iter().zip(&b.rows) {
                for (x, y) in ra.features.iter().zip(&rb.features) {
                    assert!((x - y).abs() <= 1e-11 * y.abs().max(1e-300));
                }
            }
        }
        let bad = "subject_id,task,trial_index,f0,label_feedback,label_truth\na,t,0,1.5,1,0\na,t,1,nan,1,0\n";
        assert!(matches!(FeatureTable::read_csv(bad.as_bytes()), Err(Error::Parse { row: 2, .. })));
        let no_features = "subject_id,task,trial_index,label_feedback,label_truth\n";
        assert!(matches!(FeatureTable::read_csv(no_features.as_bytes()), Err(Error::Schema(_))));
    }
}
