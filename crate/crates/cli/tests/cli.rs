mod common;

use common::*;

#[test]
fn version_prints_and_exits_zero() {
    let o = ftgap(&["version"]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap().trim(), format!("ftgap {}", env!("CARGO_PKG_VERSION")));
}

#[test]
fn simulate_writes_trajectory_and_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    let o = ftgap(&[
        "simulate", "--alpha-fast", "0.2", "--alpha-slow", "0.02", "--eps", "0.2", "--horizon", "2000", "--seed", "7", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,s,o,x_fast,x_slow,gap");
    assert_eq!(csv.lines().count(), 2001);
    let cmp: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("comparison.json")).unwrap()).unwrap();
    assert!((cmp["theory"]["peak_time"].as_f64().unwrap() - 12.792139405522478).abs() < 1e-9);
    assert!((cmp["theory"]["aug_infinite"].as_f64().unwrap() - 45.0).abs() < 1e-9);
    let m = manifest(&out);
    assert_eq!(m["seed"], 7);
    assert_eq!(m["config"]["simulate"]["horizon"], 2000);
    assert_eq!(m["outputs"], serde_json::json!(["trajectory.csv", "comparison.json"]));
}

#[test]
fn sweep_20x20_has_400_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = ftgap(&["sweep", "--grid", "20x20", "--seeds", "20", "--alpha-slow", "0.02", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("phase.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "eps,r,mean_peak,theory_peak,mean_aug,label");
    assert_eq!(lines.count(), 400);
}

#[test]
fn unknown_flag_is_usage_error() {
    let o = ftgap(&["simulate", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("Usage:"), "{err}");
    let last: serde_json::Value = serde_json::from_str(err.lines().last().unwrap()).unwrap();
    assert_eq!(last["error"], "usage");
    assert!(last["message"].as_str().unwrap().contains("--bogus"));
}

#[test]
fn bad_values_and_missing_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(ftgap(&["simulate", "--alpha-fast", "2", "--out", d]).status.code(), Some(2));
    assert_eq!(ftgap(&["sweep", "--grid", "0x3", "--out", d]).status.code(), Some(2));
    assert_eq!(ftgap(&["fit-rl", "--out", d]).status.code(), Some(2));
    let o = ftgap(&["analyze-behavior", "--input", "/nonexistent.csv", "--out", d]);
    assert_eq!(o.status.code(), Some(3));
    let line = stderr(&o);
    assert_eq!(line.lines().count(), 1);
    let v: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
    assert_eq!(v["code"], 3);
}

#[test]
fn malformed_trials_are_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.csv");
    std::fs::write(&p, "subject_id,trial_index,choice,reward,better_option\na,0,2,1,0\n").unwrap();
    let o = ftgap(&["analyze-behavior", "--input", p.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("row"));
}

#[test]
fn single_class_labels_are_numeric_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("f.csv");
    let mut text = String::from("subject_id,task,trial_index,f1,label_feedback,label_truth\n");
    for i in 0..30 {
        text.push_str(&format!("s,t,{i},{},0,{}\n", i as f64 * 0.1, i % 2));
    }
    std::fs::write(&p, text).unwrap();
    let o = ftgap(&["decode", "--input", p.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    assert_eq!(v["error"], "numeric");
}

#[test]
fn flags_override_file_override_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "seed = 11\n[simulate]\nalpha_fast = 0.5\nhorizon = 50\n").unwrap();
    let out = dir.path().join("o");
    let o = ftgap(&["simulate", "--config", cfg.to_str().unwrap(), "--horizon", "80", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = manifest(&out);
    assert_eq!(m["seed"], 11);
    assert_eq!(m["config"]["simulate"]["alpha_fast"], 0.5);
    assert_eq!(m["config"]["simulate"]["horizon"], 80);
    assert_eq!(m["config"]["simulate"]["alpha_slow"], 0.02);
    std::fs::write(&cfg, "[simulate]\nalpha_fats = 0.5\n").unwrap();
    assert_eq!(ftgap(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let o = bin()
        .env("FTGAP_OUT_DIR", &target)
        .args(["simulate", "--horizon", "10"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(target.join("manifest.json").exists());
    let flag = dir.path().join("from-flag");
    let o = bin()
        .env("FTGAP_OUT_DIR", &target)
        .args(["simulate", "--horizon", "10", "--out", flag.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(flag.join("manifest.json").exists());
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (out, threads) in [(&a, "1"), (&b, "4")] {
        let o = ftgap(&["sweep", "--grid", "5x5", "--seeds", "8", "--threads", threads, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(data_files(&a), data_files(&b));
}

#[test]
fn header_only_input_gives_header_only_output() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.csv");
    std::fs::write(&p, "subject_id,trial_index,choice,reward,better_option\n").unwrap();
    let out = dir.path().join("o");
    let o = ftgap(&["fit-rl", "--input", p.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        std::fs::read_to_string(out.join("fits.csv")).unwrap(),
        "subject_id,alpha,beta,decay,nll,converged,n_trials\n"
    );
    let m = manifest(&out);
    assert_eq!(m["inputs"][0]["bytes"], 51);
    assert_eq!(m["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn json_format_emits_parsable_tables() {
    let dir = tempfile::tempdir().unwrap();
    let trials = dir.path().join("t.csv");
    write_cohort(&trials, 4, 120, 1);
    let out = dir.path().join("o");
    let o = ftgap(&["analyze-behavior", "--input", trials.to_str().unwrap(), "--format", "json", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("group.json")).unwrap()).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for key in ["subject_id", "aug_pos", "t_star", "censored", "noise_rate"] {
        assert!(rows[0].get(key).is_some(), "{key}");
    }
    assert!(!out.join("group.csv").exists());
}

#[test]
fn every_subcommand_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let trials = dir.path().join("trials.csv");
    write_cohort(&trials, 5, 150, 9);
    for (name, args) in SUBCOMMAND_RUNS {
        rerun_identical(dir.path(), args, &trials).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}
