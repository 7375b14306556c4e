//! Simulation and analysis toolkit for the feedback–truth gap.
//!
//! A learner that integrates noisy feedback faster than it integrates the true state
//! of its environment transiently over-commits to feedback after every change. The
//! crate measures that gap in three settings with one shared metric vocabulary:
//!
//! - [`twoscale`]: the two-timescale learner, its simulation and closed-form gap
//! - [`sweep`]: noise × timescale-ratio phase diagrams
//! - [`behavior`]: reversal-locked analysis of two-option bandit data
//! - [`rlfit`]: Rescorla–Wagner likelihood, fitting and synthetic agents
//! - [`memprobe`]: an MLP trainer under label noise with a sparse-residual bottleneck
//! - [`decoder`]: cross-validated feedback/truth decoders over trial features
//! - [`metrics`] and [`stats`]: the shared gap metrics and statistics

pub mod behavior;
pub mod decoder;
pub mod error;
pub mod fmt;
pub mod memprobe;
pub mod metrics;
pub mod rlfit;
pub mod rng;
pub mod stats;
pub mod sweep;
pub mod twoscale;

pub use error::{Error, ErrorClass, Result};
pub use metrics::{EventTime, GapCurve};
