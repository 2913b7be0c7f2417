//! Tables, run manifests and output-directory handling.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const TABLE_SCHEMA_VERSION: u32 = 1;
pub const OUTPUT_DIR_ENV: &str = "OPTOCOOL_OUTPUT_DIR";
const DEFAULT_OUTPUT_DIR: &str = "optocool-out";

/// Command-line flag, then config value, then environment, then `optocool-out`.
pub fn output_dir(flag: Option<&Path>, config: Option<&Path>) -> PathBuf {
    flag.or(config)
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

pub fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", path.display())))
}

pub fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Data(format!("{}: {e}", path.display()))
}

pub fn num(x: f64) -> String {
    format!("{x:e}")
}

/// Plot-ready CSV: `#` metadata lines, a header row with units in the column names.
pub struct Table {
    name: &'static str,
    columns: Vec<&'static str>,
    meta: Vec<(String, String)>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &'static str, columns: &[&'static str]) -> Self {
        Self {
            name,
            columns: columns.to_vec(),
            meta: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let file = fs::File::create(path).map_err(io_err(path))?;
        let mut w = BufWriter::new(file);
        let mut go = || -> std::io::Result<()> {
            writeln!(w, "# schema_version: {TABLE_SCHEMA_VERSION}")?;
            writeln!(w, "# table: {}", self.name)?;
            for (k, v) in &self.meta {
                writeln!(w, "# {k}: {v}")?;
            }
            writeln!(w, "{}", self.columns.join(","))?;
            for r in &self.rows {
                writeln!(w, "{}", r.join(","))?;
            }
            w.flush()
        };
        go().map_err(io_err(path))
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
    fs::write(path, text + "\n").map_err(io_err(path))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    /// Relative to the run directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: String,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<OutputFile>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_sha256: Option<String>,
    pub steps: Vec<StepRecord>,
}

impl RunManifest {
    pub fn new(command: &str, config_bytes: Option<&[u8]>) -> Self {
        Self {
            schema_version: TABLE_SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_sha256: config_bytes.map(sha256_hex),
            steps: Vec::new(),
        }
    }

    pub fn output_count(&self) -> usize {
        self.steps.iter().map(|s| s.outputs.len()).sum()
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join("manifest.json");
        write_json(&path, self)?;
        Ok(path)
    }
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Collects the files one step writes, hashing them when the step closes.
pub struct Step {
    name: String,
    started: String,
    root: PathBuf,
    files: Vec<PathBuf>,
}

impl Step {
    pub fn start(name: &str, root: &Path) -> Self {
        Self {
            name: name.into(),
            started: now(),
            root: root.to_path_buf(),
            files: Vec::new(),
        }
    }

    pub fn add(&mut self, path: PathBuf) {
        self.files.push(path);
    }

    pub fn finish(self) -> Result<StepRecord, CliError> {
        let outputs = self
            .files
            .iter()
            .map(|p| {
                let bytes = fs::read(p).map_err(io_err(p))?;
                let rel = p.strip_prefix(&self.root).unwrap_or(p);
                Ok(OutputFile {
                    path: rel.to_string_lossy().replace('\\', "/"),
                    sha256: sha256_hex(&bytes),
                })
            })
            .collect::<Result<_, CliError>>()?;
        Ok(StepRecord {
            step: self.name,
            started: self.started,
            finished: now(),
            outputs,
        })
    }
}
