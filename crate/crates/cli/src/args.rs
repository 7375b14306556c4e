use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ftgap::behavior::{Smoothing, TruthReference};
use ftgap::memprobe::{ArchKind, NoiseMode};

use crate::config::Format;

#[derive(Debug, Parser)]
#[command(name = "ftgap", version, about = "Feedback-truth gap simulation and analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the two-timescale learner and compare with the closed form.
    Simulate(SimulateArgs),
    /// Noise-by-ratio phase diagram of the learner.
    Sweep(SweepArgs),
    /// Reversal-locked gap analysis of a trial CSV.
    AnalyzeBehavior(AnalyzeArgs),
    /// Maximum-likelihood Rescorla-Wagner fits per subject.
    FitRl(FitRlArgs),
    /// Train networks on noisy labels and track the train/validation gap.
    Probe(ProbeArgs),
    /// Cross-validated feedback and truth decoders on feature tables.
    Decode(DecodeArgs),
    /// Print the version.
    Version,
}

/// Options shared by every subcommand that produces files.
#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML config file, or a previous run's manifest.json.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed [file: seed; default 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [file: out; env FTGAP_OUT_DIR; default ./ftgap-out].
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Encoding of result tables [file: format; default csv].
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads; results do not depend on it [file: threads; default all cores].
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Fast-channel rate [default 0.2].
    #[arg(long)]
    pub alpha_fast: Option<f64>,
    /// Slow-channel rate [default 0.02].
    #[arg(long)]
    pub alpha_slow: Option<f64>,
    /// Feedback flip probability [default 0.2].
    #[arg(long)]
    pub eps: Option<f64>,
    /// Steps to simulate [default 2000].
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Gap scale [default 1].
    #[arg(long)]
    pub delta: Option<f64>,
    /// Comma-separated reversal steps [default 0].
    #[arg(long, value_delimiter = ',')]
    pub reversals: Option<Vec<usize>>,
    /// Seeds averaged for the comparison [default 1].
    #[arg(long)]
    pub replicates: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Grid shape `<noise points>x<ratio points>` [default 20x20].
    #[arg(long)]
    pub grid: Option<String>,
    /// Seeds per cell [default 20].
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Slow-channel rate [default 0.02].
    #[arg(long)]
    pub alpha_slow: Option<f64>,
    /// Steps per run [default ceil(10 / alpha_slow)].
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Gap scale [default 1].
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SmoothingKind {
    Gaussian,
    Rolling,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TruthArg {
    Current,
    PostReversal,
}

impl From<TruthArg> for TruthReference {
    fn from(t: TruthArg) -> Self {
        match t {
            TruthArg::Current => TruthReference::Current,
            TruthArg::PostReversal => TruthReference::PostReversal,
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Trial CSV `subject_id,trial_index,choice,reward,better_option`.
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Trials before each reversal [default 8].
    #[arg(long)]
    pub window_pre: Option<i64>,
    /// Trials after each reversal [default 25].
    #[arg(long)]
    pub window_post: Option<i64>,
    /// Smoothing filter [default gaussian].
    #[arg(long, value_enum)]
    pub smoothing: Option<SmoothingKind>,
    /// Gaussian kernel width in trials [default 2].
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Rolling-mean window in trials [default 5].
    #[arg(long)]
    pub rolling_window: Option<usize>,
    /// Option scored as correct [default current].
    #[arg(long, value_enum)]
    pub truth: Option<TruthArg>,
}

impl AnalyzeArgs {
    /// Smoothing implied by the flags, given the file's choice.
    pub fn smoothing(&self, from_file: Smoothing) -> Smoothing {
        let kind = self.smoothing.unwrap_or(match from_file {
            Smoothing::Gaussian { .. } => SmoothingKind::Gaussian,
            Smoothing::Rolling { .. } => SmoothingKind::Rolling,
            Smoothing::None => SmoothingKind::None,
        });
        match kind {
            SmoothingKind::Gaussian => Smoothing::Gaussian {
                sigma: self.sigma.unwrap_or(match from_file {
                    Smoothing::Gaussian { sigma } => sigma,
                    _ => 2.0,
                }),
            },
            SmoothingKind::Rolling => Smoothing::Rolling {
                window: self.rolling_window.unwrap_or(match from_file {
                    Smoothing::Rolling { window } => window,
                    _ => 5,
                }),
            },
            SmoothingKind::None => Smoothing::None,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitRlArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Trial CSV `subject_id,trial_index,choice,reward,better_option`.
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Also fit the forgetting rate of unchosen options [default false].
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub include_decay: Option<bool>,
    /// Inverse-temperature search ceiling [default 10].
    #[arg(long)]
    pub beta_max: Option<f64>,
    /// Grid points for alpha [default 21].
    #[arg(long)]
    pub alpha_points: Option<usize>,
    /// Grid points for beta [default 21].
    #[arg(long)]
    pub beta_points: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ArchArg {
    Dense,
    Resex,
    DenseLs,
    DenseResidual,
    DenseStrongreg,
}

impl From<ArchArg> for ArchKind {
    fn from(a: ArchArg) -> Self {
        match a {
            ArchArg::Dense => ArchKind::Dense,
            ArchArg::Resex => ArchKind::Resex,
            ArchArg::DenseLs => ArchKind::DenseLs,
            ArchArg::DenseResidual => ArchKind::DenseResidual,
            ArchArg::DenseStrongreg => ArchKind::DenseStrongreg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseModeArg {
    Symmetric,
    SymmetricExclusive,
}

impl From<NoiseModeArg> for NoiseMode {
    fn from(m: NoiseModeArg) -> Self {
        match m {
            NoiseModeArg::Symmetric => NoiseMode::Symmetric,
            NoiseModeArg::SymmetricExclusive => NoiseMode::SymmetricExclusive,
        }
    }
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Dataset CSV `f1,...,fd,label`; synthetic Gaussian classes when absent.
    #[arg(long, value_name = "PATH")]
    pub data: Option<PathBuf>,
    /// Synthetic sample count [default 600].
    #[arg(long)]
    pub samples: Option<usize>,
    /// Synthetic dimension [default 20].
    #[arg(long)]
    pub dim: Option<usize>,
    /// Synthetic class count [default 2].
    #[arg(long)]
    pub classes: Option<usize>,
    /// Distance between synthetic class means [default 2].
    #[arg(long)]
    pub separation: Option<f64>,
    /// Architecture [default dense].
    #[arg(long, value_enum)]
    pub arch: Option<ArchArg>,
    /// Residual strength of the resex block [default 0.25].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Inputs per unit of the sparse branch [default 3].
    #[arg(long)]
    pub degree: Option<usize>,
    /// Train the masked sparse weights [default false].
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub trainable_sparse: Option<bool>,
    /// Label noise rate [default 0.4].
    #[arg(long)]
    pub noise: Option<f64>,
    /// Label noise convention [default symmetric].
    #[arg(long, value_enum)]
    pub noise_mode: Option<NoiseModeArg>,
    /// Training epochs [default 50].
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Mini-batch size [default 32].
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Adam learning rate [default 0.001].
    #[arg(long)]
    pub lr: Option<f64>,
    /// Seeded runs [default 10].
    #[arg(long)]
    pub runs: Option<usize>,
    /// Comma-separated resex alphas for the alpha grid [default none].
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Feature table CSV; a synthetic coupled cohort when absent.
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// `subject_id,commitment` CSV for the cross-modal correlation.
    #[arg(long, value_name = "PATH")]
    pub commitments: Option<PathBuf>,
    /// Synthetic subjects [default 24].
    #[arg(long)]
    pub subjects: Option<usize>,
    /// Synthetic trials per subject [default 120].
    #[arg(long)]
    pub trials: Option<usize>,
    /// Synthetic feature count [default 6].
    #[arg(long)]
    pub features: Option<usize>,
    /// Cross-validation folds [default 3].
    #[arg(long)]
    pub folds: Option<usize>,
    /// L2 penalty of the logistic decoders [default 0.01].
    #[arg(long)]
    pub lambda: Option<f64>,
}
