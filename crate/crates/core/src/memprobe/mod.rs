//! Memorization probe: feed-forward classifiers trained on noisy labels, with the
//! train-minus-validation accuracy gap tracked per epoch.
//!
//! The `resex` architecture replaces the first dense layer with a width-preserving
//! block `h1 = x + alpha * ReLU(S x)` where `S` is a fixed sparse adjacency
//! (`degree` random inputs per unit, weights `1/degree`). `alpha` scales how much
//! nonlinear capacity the block adds on top of the identity path.

pub mod data;
pub mod net;
pub mod train;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use data::{gaussian_classes, inject_noise, stratified_split, Dataset, NoiseMode, NoiseSpec, Split};
pub use net::{build_mask, AdamConfig, ArchConfig, ArchKind, Network, SparseMask};
pub use train::{train, EpochStats, TrainConfig, TrainRun};

use crate::error::{Error, Result};
use crate::rng;
use crate::stats::{self, TestResult};

pub const DEFAULT_ALPHAS: [f64; 4] = [0.1, 0.25, 0.5, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSetup {
    pub noise_rate: f64,
    pub noise_mode: NoiseMode,
    /// Train and validation fractions; the rest is test.
    pub fractions: (f64, f64),
    pub train: TrainConfig,
}

impl Default for ProbeSetup {
    fn default() -> Self {
        ProbeSetup {
            noise_rate: 0.4,
            noise_mode: NoiseMode::Symmetric,
            fractions: (0.6, 0.2),
            train: TrainConfig::default(),
        }
    }
}

/// One seeded run: the seed fixes the split, the label noise and the training.
/// Runs of different architectures under the same seed see identical data.
pub fn run_seed(arch: &ArchConfig, data: &Dataset, setup: &ProbeSetup, seed: u64) -> Result<TrainRun> {
    let split = stratified_split(data, setup.fractions, rng::mix_seed(seed, 10, 0))?;
    let noise = NoiseSpec {
        rate: setup.noise_rate,
        mode: setup.noise_mode,
        seed: rng::mix_seed(seed, 11, 0),
    };
    train(arch, &split, &noise, &setup.train, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaRow {
    pub alpha: f64,
    pub median_aug_norm: f64,
    pub median_t_star: f64,
    pub median_test_acc: f64,
    pub aug_norm: Vec<f64>,
    pub t_star: Vec<i64>,
    pub test_acc: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaGridReport {
    pub rows: Vec<AlphaRow>,
    /// Spearman correlation of alpha with each group median; absent when undefined.
    pub rho_aug_norm: Option<TestResult>,
    pub rho_t_star: Option<TestResult>,
    pub rho_test_acc: Option<TestResult>,
}

fn rho(alphas: &[f64], medians: &[f64]) -> Result<Option<TestResult>> {
    match stats::spearman(alphas, medians) {
        Ok(t) => Ok(Some(t)),
        Err(Error::DegenerateVariance(_) | Error::InsufficientData(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Trains `base` with each `resex_alpha` for every seed (in parallel) and
/// correlates alpha with the per-alpha medians.
pub fn alpha_grid(data: &Dataset, setup: &ProbeSetup, base: &ArchConfig, alphas: &[f64], seeds: &[u64]) -> Result<AlphaGridReport> {
    if alphas.len() < 2 {
        return Err(Error::param("alphas", "need at least 2 values"));
    }
    if seeds.is_empty() {
        return Err(Error::param("seeds", "need at least one seed"));
    }
    let jobs: Vec<(usize, u64)> = (0..alphas.len()).flat_map(|a| seeds.iter().map(move |&s| (a, s))).collect();
    let runs: Vec<TrainRun> = jobs
        .par_iter()
        .map(|&(a, s)| {
            let arch = ArchConfig {
                kind: ArchKind::Resex,
                resex_alpha: alphas[a],
                ..*base
            };
            run_seed(&arch, data, setup, s)
        })
        .collect::<Result<_>>()?;
    let rows: Vec<AlphaRow> = alphas
        .iter()
        .enumerate()
        .map(|(a, &alpha)| {
            let mine = &runs[a * seeds.len()..(a + 1) * seeds.len()];
            let aug_norm: Vec<f64> = mine.iter().map(|r| r.aug_norm).collect();
            let t_star: Vec<i64> = mine.iter().map(|r| r.t_star.time).collect();
            let test_acc: Vec<f64> = mine.iter().map(|r| r.test_acc).collect();
            let ts: Vec<f64> = t_star.iter().map(|&t| t as f64).collect();
            AlphaRow {
                alpha,
                median_aug_norm: stats::median(&aug_norm),
                median_t_star: stats::median(&ts),
                median_test_acc: stats::median(&test_acc),
                aug_norm,
                t_star,
                test_acc,
            }
        })
        .collect();
    let med = |f: fn(&AlphaRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    Ok(AlphaGridReport {
        rho_aug_norm: rho(alphas, &med(|r| r.median_aug_norm))?,
        rho_t_star: rho(alphas, &med(|r| r.median_t_star))?,
        rho_test_acc: rho(alphas, &med(|r| r.median_test_acc))?,
        rows,
    })
}
