//! Config-driven sweeps, synthetic experiments and analysis runs on top of the
//! `optocool` library.

pub mod commands;
pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::{ConfigError, ExperimentConfig};
pub use output::RunManifest;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Data(String),
    #[error("{failed} of {total} spectra failed")]
    Partial { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Partial { .. } => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "optocool",
    version,
    about = "Sideband-cooling simulation and thermometry"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize analyzer spectra, calibration records and hidden truth for a sweep.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit spectra and infer phonon occupancies.
    Analyze {
        spectra: PathBuf,
        calibration: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        parallelism: usize,
    },
    /// Transparency reflection spectra and window widths.
    Eit {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Imprecision noise budget per sweep point.
    Budget {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate, analyze and compare with the hidden truth.
    CoolCurve {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and check a config without running anything.
    ValidateConfig { config: PathBuf },
}

fn load(path: &Path) -> Result<(ExperimentConfig, Vec<u8>), CliError> {
    let bytes = std::fs::read(path).map_err(|e| ConfigError {
        line: None,
        key: String::new(),
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| ConfigError {
        line: None,
        key: String::new(),
        message: "config is not valid UTF-8".into(),
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((ExperimentConfig::from_str_in(&text, &base)?, bytes))
}

fn check_batch(report: &commands::AnalysisReport) -> Result<(), CliError> {
    let failed = report.count(commands::RowStatus::Error);
    if failed > 0 {
        return Err(CliError::Partial {
            failed,
            total: report.rows.len(),
        });
    }
    Ok(())
}

/// Runs one subcommand and returns a one-line summary.
pub fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Simulate { config, out } => {
            let (cfg, bytes) = load(&config)?;
            let dir = commands::run_dir(out.as_deref(), &cfg);
            let m = commands::simulate(&cfg, &bytes, &dir)?;
            Ok(format!(
                "simulated {} points into {}",
                cfg.sweep.len(),
                dir.display()
            ) + &format!(" ({} files)", m.output_count()))
        }
        Command::Analyze {
            spectra,
            calibration,
            out,
            parallelism,
        } => {
            let default = spectra.parent().map(Path::to_path_buf);
            let dir = out
                .or_else(|| std::env::var_os(output::OUTPUT_DIR_ENV).map(PathBuf::from))
                .or(default)
                .unwrap_or_else(|| PathBuf::from("."));
            let (_, report) = commands::analyze(&spectra, &calibration, &dir, parallelism)?;
            for r in report
                .rows
                .iter()
                .filter(|r| r.status != commands::RowStatus::Ok)
            {
                eprintln!(
                    "{} [{:?}]: {}",
                    r.signal,
                    r.status,
                    r.message.as_deref().unwrap_or("")
                );
            }
            check_batch(&report)?;
            Ok(format!(
                "analyzed {} spectra ({} flagged) into {}",
                report.rows.len(),
                report.count(commands::RowStatus::Flagged),
                dir.display()
            ))
        }
        Command::Eit { config, out } => {
            let (cfg, bytes) = load(&config)?;
            let dir = commands::run_dir(out.as_deref(), &cfg);
            let (_, w) = commands::eit(&cfg, &bytes, &dir)?;
            Ok(format!(
                "wrote {} transparency spectra into {}",
                w.len(),
                dir.display()
            ))
        }
        Command::Budget { config, out } => {
            let (cfg, bytes) = load(&config)?;
            let dir = commands::run_dir(out.as_deref(), &cfg);
            let (_, rows) = commands::budget(&cfg, &bytes, &dir)?;
            Ok(format!(
                "wrote {} budget rows into {}",
                rows.len(),
                dir.display()
            ))
        }
        Command::CoolCurve { config, out } => {
            let (cfg, bytes) = load(&config)?;
            let dir = commands::run_dir(out.as_deref(), &cfg);
            let (_, report) = commands::cool_curve(&cfg, &bytes, &dir)?;
            check_batch(&report)?;
            Ok(format!(
                "cooling curve with {} points in {}",
                report.rows.len(),
                dir.display()
            ))
        }
        Command::ValidateConfig { config } => {
            let (cfg, _) = load(&config)?;
            Ok(format!(
                "{}: ok, {} sweep points, thermal models {}",
                config.display(),
                cfg.sweep.len(),
                if cfg.thermal.is_some() { "on" } else { "off" }
            ))
        }
    }
}
