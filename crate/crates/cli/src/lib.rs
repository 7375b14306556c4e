//! Batch front end for the `ftgap` toolkit.
//!
//! Every subcommand resolves its configuration (flag, then config file, then
//! default), writes its result files into the output directory and finishes
//! with `manifest.json`. Failures print one JSON line on stderr and exit with
//! 2 (usage), 3 (data) or 4 (numeric).

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;

use args::{Cli, Command, CommonArgs};
use config::{FileConfig, Format};
use error::{CliError, CliResult};
use output::{Clock, InputRecord, Manifest, Output};

pub const OUT_DIR_ENV: &str = "FTGAP_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "ftgap-out";

/// Settings shared by all subcommands after precedence is applied.
#[derive(Debug, Clone)]
pub struct Run {
    pub seed: u64,
    pub format: Format,
    pub threads: Option<usize>,
    pub out: PathBuf,
    pub file: FileConfig,
}

impl Run {
    pub fn resolve(common: &CommonArgs) -> CliResult<Self> {
        let file = match &common.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let threads = common.threads.or(file.threads);
        if threads == Some(0) {
            return Err(CliError::Usage("threads must be at least 1".into()));
        }
        let out = common
            .out
            .clone()
            .or_else(|| file.out.clone())
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
        Ok(Run {
            seed: common.seed.or(file.seed).unwrap_or(0),
            format: common.format.or(file.format).unwrap_or_default(),
            threads,
            out,
            file,
        })
    }
}

/// Runs `body`, which returns its resolved config section, then writes the manifest.
fn execute<F>(name: &str, common: &CommonArgs, body: F) -> CliResult<()>
where
    F: FnOnce(&Run, &mut Output, &mut Vec<InputRecord>) -> CliResult<FileConfig> + Send,
{
    let clock = Clock::start();
    let run = Run::resolve(common)?;
    let mut out = Output::create(&run.out, run.format)?;
    let mut inputs = Vec::new();
    let section = match run.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?
            .install(|| body(&run, &mut out, &mut inputs))?,
        None => body(&run, &mut out, &mut inputs)?,
    };
    let config = FileConfig {
        seed: Some(run.seed),
        format: Some(run.format),
        ..section
    };
    let outputs = out.files().to_vec();
    let manifest = Manifest {
        tool: "ftgap",
        version: env!("CARGO_PKG_VERSION"),
        subcommand: name,
        seed: run.seed,
        threads: run.threads,
        config: &config,
        inputs: &inputs,
        outputs: &outputs,
        started_unix: clock.started_unix(),
        wall_clock_secs: clock.elapsed(),
    };
    out.write_json("manifest.json", &manifest)
}

pub fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(a) => execute("simulate", &a.common, |r, o, i| commands::simulate(&a, r, o, i)),
        Command::Sweep(a) => execute("sweep", &a.common, |r, o, i| commands::sweep(&a, r, o, i)),
        Command::AnalyzeBehavior(a) => execute("analyze-behavior", &a.common, |r, o, i| commands::analyze_behavior(&a, r, o, i)),
        Command::FitRl(a) => execute("fit-rl", &a.common, |r, o, i| commands::fit_rl(&a, r, o, i)),
        Command::Probe(a) => execute("probe", &a.common, |r, o, i| commands::probe(&a, r, o, i)),
        Command::Decode(a) => execute("decode", &a.common, |r, o, i| commands::decode(&a, r, o, i)),
        Command::Version => {
            println!("ftgap {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    }
}

/// Parses `argv`, runs the subcommand and returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            if !e.use_stderr() {
                // --help and --version
                print!("{e}");
                return 0;
            }
            eprint!("{}", e.render());
            let text = e.to_string();
            let first = text.lines().next().unwrap_or_default();
            let err = CliError::Usage(first.trim_start_matches("error: ").to_string());
            eprintln!("{}", err.to_line());
            return err.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_line());
            e.exit_code()
        }
    }
}
