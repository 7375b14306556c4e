//! Mini-batch training runs and the per-epoch train/validation gap.

use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::data::{inject_noise, NoiseSpec, Split};
use super::net::{AdamConfig, ArchConfig, Network};
use crate::error::{Error, Result};
use crate::metrics::{aug_norm, onset_t, EventTime, GapCurve, OnsetConfig};
use crate::{fmt, rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub onset: OnsetConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 32,
            adam: AdamConfig::default(),
            onset: OnsetConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    /// Accuracy on the (possibly noisy) training labels.
    pub train_acc: f64,
    pub val_acc: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRun {
    pub seed: u64,
    pub arch: ArchConfig,
    pub noise: NoiseSpec,
    pub epochs: Vec<EpochStats>,
    pub test_acc: f64,
    /// `train_acc - val_acc` indexed by epoch.
    pub gap: GapCurve,
    pub aug_norm: f64,
    pub t_star: EventTime,
    pub mask_density: Option<f64>,
    /// Fraction of training labels changed by noise injection.
    pub flipped_fraction: f64,
}

/// Trains `arch` on the split's training part with noisy labels.
///
/// `seed` fixes initialization, the sparse mask and the batch order; the noise
/// draw is fixed by `noise.seed`. Validation and test labels are never modified.
pub fn train(arch: &ArchConfig, split: &Split, noise: &NoiseSpec, cfg: &TrainConfig, seed: u64) -> Result<TrainRun> {
    if cfg.epochs == 0 || cfg.batch_size == 0 {
        return Err(Error::param("epochs", "epochs and batch size must be positive"));
    }
    let train = &split.train;
    let noisy = inject_noise(&train.y, train.n_classes, noise)?;
    let flipped = noisy.iter().zip(&train.y).filter(|(a, b)| a != b).count();
    let mut net = Network::new(arch, train.dim(), train.n_classes, rng::mix_seed(seed, 1, 0))?;
    let mut order_rng = rng::sub_stream(seed, 2, 0);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut epochs = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut order_rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let xs: Vec<&[f64]> = chunk.iter().map(|&i| train.x[i].as_slice()).collect();
            let ys: Vec<usize> = chunk.iter().map(|&i| noisy[i]).collect();
            let loss = net.loss_and_grad(&xs, &ys);
            if !loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    detail: format!("non-finite loss {loss}"),
                });
            }
            total += loss * chunk.len() as f64;
            net.adam_step(&cfg.adam);
        }
        epochs.push(EpochStats {
            epoch,
            train_acc: net.accuracy(&train.x, &noisy),
            val_acc: net.accuracy(&split.val.x, &split.val.y),
            loss: total / train.len() as f64,
        });
    }
    let gap = GapCurve::new(
        epochs.iter().map(|e| e.epoch as i64).collect(),
        epochs.iter().map(|e| e.train_acc - e.val_acc).collect(),
    )?;
    let onset = OnsetConfig {
        total_t: Some(cfg.onset.total_t.unwrap_or(cfg.epochs as i64)),
        ..cfg.onset
    };
    Ok(TrainRun {
        seed,
        arch: *arch,
        noise: *noise,
        test_acc: net.accuracy(&split.test.x, &split.test.y),
        aug_norm: aug_norm(&gap)?,
        t_star: onset_t(&gap, &onset)?,
        gap,
        epochs,
        mask_density: net.mask.as_ref().map(|m| m.density()),
        flipped_fraction: flipped as f64 / train.len().max(1) as f64,
    })
}

impl TrainRun {
    /// Writes `epoch,train_acc,val_acc`.
    pub fn write_epoch_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epoch", "train_acc", "val_acc"])?;
        for e in &self.epochs {
            w.write_record([e.epoch.to_string(), fmt::float(e.train_acc), fmt::float(e.val_acc)])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `{aug_norm, t_star, censored, test_acc}`.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "aug_norm": self.aug_norm,
            "t_star": self.t_star.time,
            "censored": self.t_star.censored,
            "test_acc": self.test_acc,
        })
    }
}
