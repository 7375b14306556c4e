#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ftgap::behavior::write_trials;
use ftgap::rlfit::{simulate_agent, BanditEnv, RWParams};

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ftgap"));
    c.env_remove("FTGAP_OUT_DIR");
    c
}

pub fn ftgap(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn ftgap_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// RW agents on the 75/25 schedule, written as a trial CSV.
pub fn write_cohort(path: &Path, n: usize, trials: usize, seed: u64) {
    let params = RWParams::new(0.2, 8.0, None).unwrap();
    let env = BanditEnv::evenly_reversing(trials, 5);
    let records: Vec<_> = (0..n)
        .flat_map(|s| simulate_agent(&params, &env, ftgap::rng::mix_seed(seed, s as u64, 0), &format!("sub{s:02}")).unwrap())
        .collect();
    write_trials(&records, std::fs::File::create(path).unwrap()).unwrap();
}

/// Every file under `dir` except the manifest, keyed by relative path.
pub fn data_files(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "manifest.json" {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

pub fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

/// Small but complete argument sets for every data-producing subcommand.
/// `{trials}` is replaced by a trial CSV path.
pub const SUBCOMMAND_RUNS: &[(&str, &[&str])] = &[
    ("simulate", &["simulate", "--horizon", "300", "--replicates", "20", "--seed", "7"]),
    ("sweep", &["sweep", "--grid", "4x5", "--seeds", "5", "--seed", "3"]),
    ("analyze-behavior", &["analyze-behavior", "--input", "{trials}", "--seed", "2"]),
    ("fit-rl", &["fit-rl", "--input", "{trials}", "--seed", "2"]),
    ("probe", &["probe", "--runs", "2", "--epochs", "4", "--samples", "120", "--alphas", "0.1,1.0", "--seed", "4"]),
    ("decode", &["decode", "--subjects", "6", "--trials", "60", "--seed", "5"]),
];

/// Runs `args` into `out`, then reruns from the written manifest into `out2`,
/// and reports whether every data file is byte-identical.
pub fn rerun_identical(work: &Path, args: &[&str], trials: &Path) -> Result<(), String> {
    let a: Vec<String> = args.iter().map(|s| s.replace("{trials}", trials.to_str().unwrap())).collect();
    let first = work.join(format!("{}-a", args[0]));
    let second = work.join(format!("{}-b", args[0]));
    let mut full = a.clone();
    full.extend(["--out".into(), first.display().to_string()]);
    let o = bin().args(&full).output().unwrap();
    if !o.status.success() {
        return Err(format!("first run failed: {}", stderr(&o)));
    }
    let o = bin()
        .args([
            args[0],
            "--config",
            first.join("manifest.json").to_str().unwrap(),
            "--out",
            second.to_str().unwrap(),
            "--threads",
            "1",
        ])
        .output()
        .unwrap();
    if !o.status.success() {
        return Err(format!("rerun failed: {}", stderr(&o)));
    }
    let (x, y) = (data_files(&first), data_files(&second));
    if x.is_empty() {
        return Err("no data files written".into());
    }
    if x != y {
        let differing: Vec<_> = x.keys().filter(|k| x.get(*k) != y.get(*k)).collect();
        return Err(format!("files differ: {differing:?}"));
    }
    if manifest(&first)["config"] != manifest(&second)["config"] {
        return Err("resolved configs differ".into());
    }
    Ok(())
}
