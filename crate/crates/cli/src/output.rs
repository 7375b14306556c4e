//! Output directory handling and the run manifest.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{FileConfig, Format};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize)]
pub struct InputRecord {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Reads an input file and records its digest for the manifest.
pub fn read_input(path: &Path, inputs: &mut Vec<InputRecord>) -> CliResult<Vec<u8>> {
    let bytes = fs::read(path).map_err(|e| CliError::Data(format!("cannot read `{}`: {e}", path.display())))?;
    inputs.push(InputRecord {
        path: path.display().to_string(),
        bytes: bytes.len() as u64,
        sha256: format!("{:x}", Sha256::digest(&bytes)),
    });
    Ok(bytes)
}

pub struct Output {
    dir: PathBuf,
    format: Format,
    files: Vec<String>,
}

impl Output {
    pub fn create(dir: &Path, format: Format) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("cannot create `{}`: {e}", dir.display())))?;
        Ok(Output {
            dir: dir.to_path_buf(),
            format,
            files: Vec::new(),
        })
    }

    pub fn format(&self) -> Format {
        self.format
    }

    /// Writes `name` (relative to the output directory) through `f`.
    pub fn write<F>(&mut self, name: &str, f: F) -> CliResult<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> CliResult<()>,
    {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let file = File::create(&path).map_err(|e| CliError::Data(format!("cannot write `{}`: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        f(&mut w)?;
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> CliResult<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }

    /// Writes a result table as `<stem>.csv` through `csv_writer`, or as a JSON
    /// array `<stem>.json`, depending on the run format.
    pub fn write_table<T, F>(&mut self, stem: &str, rows: &[T], csv_writer: F) -> CliResult<()>
    where
        T: Serialize,
        F: FnOnce(&mut BufWriter<File>) -> CliResult<()>,
    {
        match self.format {
            Format::Csv => self.write(&format!("{stem}.csv"), csv_writer),
            Format::Json => self.write_json(&format!("{stem}.json"), rows),
        }
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

/// `manifest.json`: everything needed to rerun, plus timing.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'a str,
    pub seed: u64,
    pub threads: Option<usize>,
    /// Resolved configuration; loadable again with `--config manifest.json`.
    pub config: &'a FileConfig,
    pub inputs: &'a [InputRecord],
    pub outputs: &'a [String],
    pub started_unix: u64,
    pub wall_clock_secs: f64,
}

pub struct Clock {
    started_unix: u64,
    start: Instant,
}

impl Clock {
    pub fn start() -> Self {
        Clock {
            started_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            start: Instant::now(),
        }
    }

    pub fn started_unix(&self) -> u64 {
        self.started_unix
    }

    pub fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}
