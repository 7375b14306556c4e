//! Resolved run configuration and the config-file format.
//!
//! A config file is TOML with optional top-level `seed`, `format`, `threads` and
//! `out`, and one table per subcommand (`simulate`, `sweep`, `analyze_behavior`,
//! `fit_rl`, `probe`, `decode`) whose keys mirror the resolved configuration
//! recorded in `manifest.json`. A previous run's `manifest.json` is also accepted.
//! Flags override file values, which override built-in defaults.

use std::path::{Path, PathBuf};

use ftgap::behavior::GapConfig;
use ftgap::decoder::CvConfig;
use ftgap::memprobe::{ArchConfig, ArchKind, ProbeSetup};
use ftgap::rlfit::FitConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analyze_behavior: Option<AnalyzeConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_rl: Option<FitRlConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decode: Option<DecodeConfig>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config `{}`: {e}", path.display())))?;
        Self::parse(&text, path.extension().is_some_and(|e| e == "json"))
    }

    /// Parses TOML, or JSON when `json` is set (a bare config object or a
    /// manifest carrying one under `config`).
    pub fn parse(text: &str, json: bool) -> CliResult<Self> {
        if json {
            let mut v: serde_json::Value =
                serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
            if let Some(inner) = v.get_mut("config") {
                v = inner.take();
            }
            serde_json::from_value(v).map_err(|e| CliError::Usage(format!("config: {e}")))
        } else {
            toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {}", e.to_string().replace('\n', " "))))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub alpha_fast: f64,
    pub alpha_slow: f64,
    pub eps: f64,
    pub horizon: usize,
    pub delta: f64,
    pub reversals: Vec<usize>,
    /// Seeds averaged for the simulated side of the comparison.
    pub replicates: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            alpha_fast: 0.2,
            alpha_slow: 0.02,
            eps: 0.2,
            horizon: 2000,
            delta: 1.0,
            reversals: vec![0],
            replicates: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// `<noise points>x<ratio points>`.
    pub grid: String,
    pub seeds: usize,
    pub alpha_slow: f64,
    /// Defaults to `ceil(10 / alpha_slow)`.
    pub horizon: Option<usize>,
    pub delta: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            grid: "20x20".into(),
            seeds: 20,
            alpha_slow: 0.02,
            horizon: None,
            delta: 1.0,
        }
    }
}

impl SweepConfig {
    pub fn grid_shape(&self) -> CliResult<(usize, usize)> {
        let bad = || CliError::Usage(format!("grid `{}` is not of the form NxM with N, M >= 1", self.grid));
        let (a, b) = self.grid.split_once(['x', 'X']).ok_or_else(bad)?;
        let n: usize = a.trim().parse().map_err(|_| bad())?;
        let m: usize = b.trim().parse().map_err(|_| bad())?;
        if n == 0 || m == 0 {
            return Err(bad());
        }
        Ok((n, m))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub input: Option<PathBuf>,
    pub gap: GapConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitRlConfig {
    pub input: Option<PathBuf>,
    pub fit: FitConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticData {
    pub samples: usize,
    pub dim: usize,
    pub classes: usize,
    pub separation: f64,
}

impl Default for SyntheticData {
    fn default() -> Self {
        SyntheticData {
            samples: 600,
            dim: 20,
            classes: 2,
            separation: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchSpec {
    pub kind: ArchKind,
    pub hidden: (usize, usize),
    pub resex_alpha: f64,
    pub degree: usize,
    pub trainable_sparse: bool,
    /// Defaults to 0.1 for `dense_ls`, else 0.
    pub label_smoothing: Option<f64>,
    /// Defaults to 0.01 for `dense_strongreg`, else 0.
    pub l2_lambda: Option<f64>,
}

impl Default for ArchSpec {
    fn default() -> Self {
        let base = ArchConfig::new(ArchKind::Dense);
        ArchSpec {
            kind: base.kind,
            hidden: base.hidden,
            resex_alpha: base.resex_alpha,
            degree: base.degree,
            trainable_sparse: base.trainable_sparse,
            label_smoothing: None,
            l2_lambda: None,
        }
    }
}

impl ArchSpec {
    pub fn resolve(&self) -> ArchConfig {
        let base = ArchConfig::new(self.kind);
        ArchConfig {
            hidden: self.hidden,
            resex_alpha: self.resex_alpha,
            degree: self.degree,
            trainable_sparse: self.trainable_sparse,
            label_smoothing: self.label_smoothing.unwrap_or(base.label_smoothing),
            l2_lambda: self.l2_lambda.unwrap_or(base.l2_lambda),
            ..base
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    /// Dataset CSV; a synthetic Gaussian dataset is generated when absent.
    pub data: Option<PathBuf>,
    pub synthetic: SyntheticData,
    pub arch: ArchSpec,
    pub setup: ProbeSetup,
    pub runs: usize,
    /// When non-empty, also trains resex at each alpha over the same seeds.
    pub alphas: Vec<f64>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            data: None,
            synthetic: SyntheticData::default(),
            arch: ArchSpec::default(),
            setup: ProbeSetup::default(),
            runs: 10,
            alphas: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticCohort {
    pub subjects: usize,
    pub trials: usize,
    pub features: usize,
    pub noise_sd: f64,
}

impl Default for SyntheticCohort {
    fn default() -> Self {
        SyntheticCohort {
            subjects: 24,
            trials: 120,
            features: 6,
            noise_sd: 0.1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeConfig {
    /// Feature table CSV; a synthetic coupled cohort is generated when absent.
    pub input: Option<PathBuf>,
    /// `subject_id,commitment` CSV for the cross-modal correlation.
    pub commitments: Option<PathBuf>,
    pub synthetic: SyntheticCohort,
    /// `seed` is always replaced by the run's master seed.
    pub cv: CvConfig,
}
