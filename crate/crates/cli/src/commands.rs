//! Subcommand bodies. Each resolves its section of the configuration, writes its
//! result files and returns the resolved section for the manifest.

use std::collections::BTreeMap;

use ftgap::behavior::{self, analyze_cohort, load_trials, write_group_csv};
use ftgap::decoder::{self, cross_modal, decode_table, split_half_cohort, synthetic_coupled_cohort, FeatureTable};
use ftgap::memprobe::{self, alpha_grid, gaussian_classes, run_seed, Dataset};
use ftgap::rlfit::{fit_subjects, write_fit_csv};
use ftgap::rng::mix_seed;
use ftgap::stats::{self, TestResult};
use ftgap::sweep::{r_squared, run_grid, write_phase_csv, GridSpec};
use ftgap::twoscale::{
    aug_closed_form, ensemble, gap_expected, peak_gap, peak_time, simulate as simulate_learner, DecayModel, EnvConfig,
    Horizon, LearnerParams,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{AnalyzeArgs, DecodeArgs, FitRlArgs, ProbeArgs, SimulateArgs, SweepArgs};
use crate::config::FileConfig;
use crate::error::{CliError, CliResult};
use crate::output::{read_input, InputRecord, Output};
use crate::Run;

/// Copies every flag that was given onto the same-named config field.
macro_rules! overlay {
    ($cfg:expr, $args:expr; $($field:ident),* $(,)?) => {
        $(
            if let Some(v) = $args.$field.clone() {
                $cfg.$field = v;
            }
        )*
    };
}

/// Turns "undefined" statistical outcomes into `None` and keeps real failures.
fn optional<T>(r: ftgap::Result<T>) -> ftgap::Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(ftgap::Error::DegenerateVariance(_) | ftgap::Error::InsufficientData(_) | ftgap::Error::DegenerateRates) => Ok(None),
        Err(e) => Err(e),
    }
}

fn required_input(path: &Option<std::path::PathBuf>, flag: &str) -> CliResult<std::path::PathBuf> {
    path.clone()
        .ok_or_else(|| CliError::Usage(format!("missing input: pass --{flag} or set it in the config file")))
}

// ---------------------------------------------------------------------------
// simulate

pub fn simulate(a: &SimulateArgs, run: &Run, out: &mut Output, _inputs: &mut Vec<InputRecord>) -> CliResult<FileConfig> {
    let mut cfg = run.file.simulate.clone().unwrap_or_default();
    overlay!(cfg, a; alpha_fast, alpha_slow, eps, horizon, delta, reversals, replicates);
    if cfg.replicates == 0 {
        return Err(CliError::Usage("replicates must be at least 1".into()));
    }
    let params = LearnerParams::new(cfg.alpha_fast, cfg.alpha_slow)?;
    let env = EnvConfig {
        noise_eps: cfg.eps,
        horizon: cfg.horizon,
        reversal_times: cfg.reversals.clone(),
        delta: cfg.delta,
    };
    let trajectory = simulate_learner(&params, &env, mix_seed(run.seed, 0, 0))?;
    out.write_table("trajectory", &trajectory.records, |w| Ok(trajectory.write_csv(w)?))?;
    let comparison = compare(&params, &env, cfg.replicates, run.seed)?;
    out.write_json("comparison.json", &comparison)?;
    Ok(FileConfig {
        simulate: Some(cfg),
        ..FileConfig::default()
    })
}

/// Closed form against the across-replicate mean curve after the first reversal,
/// up to the next reversal or the horizon.
fn compare(params: &LearnerParams, env: &EnvConfig, replicates: usize, seed: u64) -> CliResult<Value> {
    let theory = json!({
        "ratio": params.ratio(),
        "peak_time": optional(peak_time(params))?,
        "peak_gap": peak_gap(params, env.delta)?,
        "aug_infinite": aug_closed_form(params, env.delta, Horizon::Infinite)?,
    });
    let Some(&start) = env.reversal_times.first() else {
        return Ok(json!({ "theory": theory, "segment": Value::Null }));
    };
    let end = env.reversal_times.get(1).copied().unwrap_or(env.horizon);
    let curve = ensemble(params, env, (0..replicates as u64).map(|k| mix_seed(seed, 0, k)))?;
    let segment = &curve.mean[start..end];
    let (peak_step, peak_value) = segment
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best });
    let expected: Vec<f64> = (0..segment.len())
        .map(|t| gap_expected(params, env.delta, t as f64, DecayModel::Discrete))
        .collect();
    let max_dev = segment.iter().zip(&expected).map(|(s, e)| (s - e).abs()).fold(0.0, f64::max);
    Ok(json!({
        "theory": theory,
        "segment": {
            "start": start,
            "length": segment.len(),
            "aug_window_closed_form": aug_closed_form(params, env.delta, Horizon::Finite(segment.len() as f64))?,
            "aug_window_discrete": expected.iter().sum::<f64>(),
            "discrete_peak_gap": expected.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        },
        "simulated": {
            "replicates": replicates,
            "peak_step": peak_step,
            "peak_gap": peak_value,
            "aug_window": segment.iter().sum::<f64>(),
            "max_abs_deviation_from_discrete": max_dev,
        },
    }))
}

// ---------------------------------------------------------------------------
// sweep

pub fn sweep(a: &SweepArgs, run: &Run, out: &mut Output, _inputs: &mut Vec<InputRecord>) -> CliResult<FileConfig> {
    let mut cfg = run.file.sweep.clone().unwrap_or_default();
    overlay!(cfg, a; grid, seeds, alpha_slow, delta);
    if a.horizon.is_some() {
        cfg.horizon = a.horizon;
    }
    let (n_noise, n_ratio) = cfg.grid_shape()?;
    LearnerParams::new(cfg.alpha_slow, cfg.alpha_slow)?;
    let mut spec = GridSpec::default_grid(n_noise, n_ratio, cfg.alpha_slow, cfg.seeds);
    spec.horizon = cfg.horizon.unwrap_or(spec.horizon);
    spec.delta = cfg.delta;
    cfg.horizon = Some(spec.horizon);
    let cells = run_grid(&spec, run.seed)?;
    out.write_table("phase", &cells, |w| Ok(write_phase_csv(&cells, w)?))?;
    let theory: Vec<f64> = cells.iter().map(|c| c.theory_peak).collect();
    let simulated: Vec<f64> = cells.iter().map(|c| c.mean_peak).collect();
    out.write_json(
        "grid.json",
        &json!({
            "noise_values": spec.noise_values,
            "ratio_values": spec.ratio_values,
            "alpha_slow": spec.alpha_slow,
            "horizon": spec.horizon,
            "seeds_per_cell": spec.seeds_per_cell,
            "delta": spec.delta,
            "n_cells": cells.len(),
            "r_squared_peak": optional(r_squared(&theory, &simulated))?,
        }),
    )?;
    Ok(FileConfig {
        sweep: Some(cfg),
        ..FileConfig::default()
    })
}

// ---------------------------------------------------------------------------
// analyze-behavior

pub fn analyze_behavior(a: &AnalyzeArgs, run: &Run, out: &mut Output, inputs: &mut Vec<InputRecord>) -> CliResult<FileConfig> {
    let mut cfg = run.file.analyze_behavior.clone().unwrap_or_default();
    if a.input.is_some() {
        cfg.input = a.input.clone();
    }
    if let Some(pre) = a.window_pre {
        cfg.gap.window.0 = -pre;
    }
    if let Some(post) = a.window_post {
        cfg.gap.window.1 = post;
    }
    cfg.gap.smoothing = a.smoothing(cfg.gap.smoothing);
    if let Some(t) = a.truth {
        cfg.gap.truth = t.into();
    }
    let path = required_input(&cfg.input, "input")?;
    let bytes = read_input(&path, inputs)?;
    let records = load_trials(bytes.as_slice())?;
    let analysis = analyze_cohort(&records, &cfg.gap, run.seed)?;
    let rows: Vec<GroupRow> = analysis.subjects.iter().map(GroupRow::from).collect();
    out.write_table("group", &rows, |w| Ok(write_group_csv(&analysis.subjects, w)?))?;
    out.write_json("subjects.json", &analysis.subjects)?;
    out.write_json("summary.json", &analysis.group)?;
    Ok(FileConfig {
        analyze_behavior: Some(cfg),
        ..FileConfig::default()
    })
}

#[derive(Serialize)]
struct GroupRow<'a> {
    subject_id: &'a str,
    aug_pos: f64,
    t_star: i64,
    censored: bool,
    noise_rate: f64,
}

impl<'a> From<&'a behavior::SubjectGapSummary> for GroupRow<'a> {
    fn from(s: &'a behavior::SubjectGapSummary) -> Self {
        GroupRow {
            subject_id: &s.subject_id,
            aug_pos: s.aug_pos,
            t_star: s.t_star.time,
            censored: s.t_star.censored,
            noise_rate: s.noise_rate,
        }
    }
}

// ---------------------------------------------------------------------------
// fit-rl

pub fn fit_rl(a: &FitRlArgs, run: &Run, out: &mut Output, inputs: &mut Vec<InputRecord>) -> CliResult<FileConfig> {
    let mut cfg = run.file.fit_rl.clone().unwrap_or_default();
    if a.input.is_some() {
        cfg.input = a.input.clone();
    }
    overlay!(cfg.fit, a; include_decay, beta_max, alpha_points, beta_points);
    let path = required_input(&cfg.input, "input")?;
    let bytes = read_input(&path, inputs)?;
    let records = load_trials(bytes.as_slice())?;
    let fits = fit_subjects(&records, &cfg.fit)?;
    out.write_table("fits", &fits, |w| Ok(write_fit_csv(&fits, w)?))?;
    let alphas: Vec<f64> = fits.iter().map(|f| f.fit.params.alpha).collect();
    let betas: Vec<f64> = fits.iter().map(|f| f.fit.params.beta).collect();
    let median = |v: &[f64]| (!v.is_empty()).then(|| stats::median(v));
    out.write_json(
        "summary.json",
        &json!({
            "n_subjects": fits.len(),
            "n_converged": fits.iter().filter(|f| f.fit.converged).count(),
            "n_beta_at_bound": fits.iter().filter(|f| f.fit.beta_at_bound).count(),
            "n_low_data": fits.iter().filter(|f| f.fit.low_data).count(),
            "median_alpha": median(&alphas),
            "median_beta": median(&betas),
        }),
    )?;
    Ok(FileConfig {
        fit_rl: Some(cfg),
        ..FileConfig::default()
    })
}

// ---------------------------------------------------------------------------
// probe

#[derive(Serialize)]
struct ProbeRow {
    run: usize,
    seed: u64,
    arch: &'static str,
    resex_alpha: f64,
    aug_norm: f64,
    t_star: i64,
    censored: bool,
    test_acc: f64,
    flipped_fraction: f64,
}

fn write_probe_csv<W: std::io::Write>(rows: &[ProbeRow], w: W) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record([
        "run",
        "seed",
        "arch",
        "resex_alpha",
        "aug_norm",
        "t_star",
        "censored",
        "test_acc",
        "flipped_fraction",
    ])?;
    for r in rows {
        w.write_record([
            r.run.to_string(),
            r.seed.to_string(),
            r.arch.to_string(),
            ftgap::fmt::float(r.resex_alpha),
            ftgap::fmt::float(r.aug_norm),
            r.t_star.to_string(),
            r.censored.to_string(),
            ftgap::fmt::float(r.test_acc),
            ftgap::fmt::float(r.flipped_fraction),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn probe(a: &ProbeArgs, run: &Run, out: &mut Output, inputs: &mut Vec<InputRecord>) -> CliResult<FileConfig> {
    let mut cfg = run.file.probe.clone().unwrap_or_default();
    if a.data.is_some() {
        cfg.data = a.data.clone();
    }
    overlay!(cfg.synthetic, a; samples, dim, classes, separation);
    overlay!(cfg, a; runs, alphas);
    if let Some(k) = a.arch {
        cfg.arch.kind = k.into();
    }
    if let Some(alpha) = a.alpha {
        cfg.arch.resex_alpha = alpha;
    }
    overlay!(cfg.arch, a; degree, trainable_sparse);
    if let Some(r) = a.noise {
        cfg.setup.noise_rate = r;
    }
    if let Some(m) = a.noise_mode {
        cfg.setup.noise_mode = m.into();
    }
    overlay!(cfg.setup.train, a; epochs, batch_size);
    if let Some(lr) = a.lr {
        cfg.setup.train.adam.lr = lr;
    }
    let arch = cfg.arch.resolve();
    arch.validate()?;
    cfg.arch.label_smoothing = Some(arch.label_smoothing);
    cfg.arch.l2_lambda = Some(arch.l2_lambda);

    let data: Dataset = match &cfg.data {
        Some(path) => Dataset::read_csv(read_input(path, inputs)?.as_slice())?,
        None => {
            let s = &cfg.synthetic;
            gaussian_classes(s.samples, s.dim, s.classes, s.separation, run.seed)?
        }
    };
    let seeds: Vec<u64> = (0..cfg.runs as u64).map(|k| mix_seed(run.seed, k, 0)).collect();
    let runs: Vec<memprobe::TrainRun> = {
        use rayon::prelude::*;
        seeds
            .par_iter()
            .map(|&s| run_seed(&arch, &data, &cfg.setup, s))
            .collect::<ftgap::Result<_>>()?
    };
    let rows: Vec<ProbeRow> = runs
        .iter()
        .enumerate()
        .map(|(k, r)| ProbeRow {
            run: k,
            seed: r.seed,
            arch: arch.kind.as_str(),
            resex_alpha: arch.resex_alpha,
            aug_norm: r.aug_norm,
            t_star: r.t_star.time,
            censored: r.t_star.censored,
            test_acc: r.test_acc,
            flipped_fraction: r.flipped_fraction,
        })
        .collect();
    out.write_table("runs", &rows, |w| write_probe_csv(&rows, w))?;
    for (k, r) in runs.iter().enumerate() {
        match out.format() {
            crate::config::Format::Csv => out.write(&format!("epochs/run_{k:03}.csv"), |w| Ok(r.write_epoch_csv(w)?))?,
            crate::config::Format::Json => out.write_json(&format!("epochs/run_{k:03}.json"), &r.epochs)?,
        }
    }
    let summaries: Vec<Value> = runs.iter().map(|r| r.summary_json()).collect();
    out.write_json("summary.json", &summaries)?;
    if !cfg.alphas.is_empty() {
        let report = alpha_grid(&data, &cfg.setup, &arch, &cfg.alphas, &seeds)?;
        out.write_json("alpha_grid.json", &report)?;
    }
    Ok(FileConfig {
        probe: Some(cfg),
        ..FileConfig::default()
    })
}

// ---------------------------------------------------------------------------
// decode

fn read_commitments(bytes: &[u8]) -> CliResult<BTreeMap<String, f64>> {
    let mut rdr = csv::Reader::from_reader(bytes);
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["subject_id", "commitment"] {
        return Err(CliError::Data("commitments header must be `subject_id,commitment`".into()));
    }
    let mut map = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let v: f64 = rec[1]
            .trim()
            .parse()
            .map_err(|_| CliError::Data(format!("commitments row {}: `{}` is not a number", i + 1, &rec[1])))?;
        if map.insert(rec[0].to_string(), v).is_some() {
            return Err(CliError::Data(format!("commitments row {}: duplicate subject `{}`", i + 1, &rec[0])));
        }
    }
    Ok(map)
}

pub fn decode(a: &DecodeArgs, run: &Run, out: &mut Output, inputs: &mut Vec<InputRecord>) -> CliResult<FileConfig> {
    let mut cfg = run.file.decode.clone().unwrap_or_default();
    if a.input.is_some() {
        cfg.input = a.input.clone();
    }
    if a.commitments.is_some() {
        cfg.commitments = a.commitments.clone();
    }
    overlay!(cfg.synthetic, a; subjects, trials, features);
    if let Some(k) = a.folds {
        cfg.cv.k = k;
    }
    overlay!(cfg.cv, a; lambda);
    cfg.cv.seed = run.seed;

    let (table, mut commitments) = match &cfg.input {
        Some(path) => (FeatureTable::read_csv(read_input(path, inputs)?.as_slice())?, None),
        None => {
            let s = &cfg.synthetic;
            let cohort = synthetic_coupled_cohort(s.subjects, s.trials, s.features, s.noise_sd, run.seed)?;
            out.write("synthetic_features.csv", |w| Ok(cohort.table.write_csv(w)?))?;
            let map: BTreeMap<String, f64> = cohort
                .table
                .blocks
                .iter()
                .map(|b| b.subject_id.clone())
                .zip(cohort.commitments.iter().copied())
                .collect();
            (cohort.table, Some(map))
        }
    };
    if let Some(path) = &cfg.commitments {
        commitments = Some(read_commitments(&read_input(path, inputs)?)?);
    }
    let decoded = decode_table(&table, &cfg.cv)?;
    out.write_table("decode", &decoded, |w| write_decode_csv(&decoded, w))?;

    let series: Vec<decoder::NeuralGapSeries> = decoded.iter().filter_map(|d| d.series.clone()).collect();
    let split = optional(split_half_cohort(&series))?;
    let cross: Option<TestResult> = match &commitments {
        Some(map) => {
            // average the neural gap over a subject's blocks
            let mut per_subject: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
            for d in &decoded {
                let e = per_subject.entry(&d.subject_id).or_insert((0.0, 0));
                e.0 += d.neural_aug_pos;
                e.1 += 1;
            }
            let (c, n): (Vec<f64>, Vec<f64>) = per_subject
                .iter()
                .filter_map(|(id, (sum, k))| map.get(*id).map(|c| (*c, sum / *k as f64)))
                .unzip();
            optional(cross_modal(&c, &n))?
        }
        None => None,
    };
    out.write_json(
        "summary.json",
        &json!({
            "n_blocks": decoded.len(),
            "all_hygiene_ok": decoded.iter().all(|d| d.hygiene_ok),
            "all_converged": decoded.iter().all(|d| d.converged),
            "split_half_cohort": split,
            "cross_modal": cross,
        }),
    )?;
    Ok(FileConfig {
        decode: Some(cfg),
        ..FileConfig::default()
    })
}

fn write_decode_csv<W: std::io::Write>(rows: &[decoder::BlockDecode], w: W) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record([
        "subject_id",
        "task",
        "n_trials",
        "auroc_feedback",
        "auroc_truth",
        "neural_aug_pos",
        "split_half_r",
        "log_loss_feedback",
        "log_loss_truth",
        "converged",
        "hygiene_ok",
    ])?;
    let f = ftgap::fmt::float;
    for d in rows {
        w.write_record([
            d.subject_id.clone(),
            d.task.clone(),
            d.n_trials.to_string(),
            f(d.auroc_feedback),
            f(d.auroc_truth),
            f(d.neural_aug_pos),
            d.split_half_r.map(f).unwrap_or_default(),
            f(d.log_loss_feedback),
            f(d.log_loss_truth),
            d.converged.to_string(),
            d.hygiene_ok.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
