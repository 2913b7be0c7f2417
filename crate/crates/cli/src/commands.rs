//! Subcommand implementations. Each writes its files under a run directory and
//! returns the manifest describing them.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use optocool::analysis::CalibrationRecord;
use optocool::experiment::{
    analyze_point, simulate_point, system_estimate, InputErrors, PointTruth,
};
use optocool::measurement::{lockin_demodulate, probe_amplitude, ChainModel, NoiseBudget};
use optocool::model::{
    backaction_rate, cooled_occupancy, drive_for_photons, thermal_occupancy, CavityParams,
};
use optocool::quantum::{eit_reflection, LinearizedSystem, ReflectionModel};
use optocool::units::{hz_to_rad, rad_to_hz, ratio_to_db};
use optocool::{Error, FrequencyGrid, Spectrum};

use crate::config::ExperimentConfig;
use crate::output::{create_dir, io_err, num, write_json, RunManifest, Step, StepRecord, Table};
use crate::CliError;

pub const CALIBRATION_FILE: &str = "calibration.toml";
pub const SPECTRA_DIR: &str = "spectra";
pub const TRUTH_DIR: &str = "truth";

fn data(e: Error) -> CliError {
    CliError::Data(e.to_string())
}

fn pool(parallelism: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| CliError::Data(format!("thread pool: {e}")))
}

fn signal_name(i: usize) -> String {
    format!("point_{i:03}.csv")
}

fn background_name(i: usize) -> String {
    format!("point_{i:03}.background.csv")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceEstimate {
    pub optical_frequency_hz: f64,
    pub kappa_hz: f64,
    pub kappa_e_hz: f64,
    pub mechanical_frequency_hz: f64,
    /// Relative 1σ errors of the independently characterized inputs.
    pub errors: InputErrors,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub index: usize,
    pub n_c: f64,
    pub detuning_hz: f64,
    pub intrinsic_linewidth_hz: f64,
    pub signal: String,
    pub background: String,
    pub record: CalibrationRecord,
}

/// Everything the analysis is allowed to know about a simulated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFile {
    pub schema_version: u32,
    pub device: DeviceEstimate,
    #[serde(default)]
    pub points: Vec<CalibrationPoint>,
}

impl CalibrationFile {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        toml::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub index: usize,
    pub seed: u64,
    pub signal_stream: u64,
    pub averages: u64,
    pub truth: PointTruth,
    pub budget: NoiseBudget,
}

/// Forward-simulates every sweep point and writes spectra, calibration and truth files.
pub fn simulate_step(
    cfg: &ExperimentConfig,
    out: &Path,
) -> Result<(StepRecord, Vec<TruthRecord>), CliError> {
    let mut step = Step::start("simulate", out);
    let spectra = out.join(SPECTRA_DIR);
    let truth_dir = out.join(TRUTH_DIR);
    create_dir(&spectra)?;
    create_dir(&truth_dir)?;
    let setup = cfg.setup;
    let points = pool(cfg.parallelism)?.install(|| {
        cfg.sweep
            .par_iter()
            .enumerate()
            .map(|(i, &n_c)| {
                let op = cfg.operating_point(n_c)?;
                simulate_point(&setup, &op, i as u64)
            })
            .collect::<optocool::Result<Vec<_>>>()
    });
    let points = points.map_err(data)?;

    let mut calibration = CalibrationFile {
        schema_version: crate::output::TABLE_SCHEMA_VERSION,
        device: DeviceEstimate {
            optical_frequency_hz: rad_to_hz(setup.cavity.omega_o()),
            kappa_hz: rad_to_hz(setup.cavity.kappa()),
            kappa_e_hz: rad_to_hz(setup.cavity.kappa_e()),
            mechanical_frequency_hz: rad_to_hz(setup.omega_m),
            errors: cfg.errors,
        },
        points: Vec::new(),
    };
    let mut truths = Vec::new();
    let mut sweep = Table::new(
        "sweep_truth",
        &[
            "index",
            "n_c",
            "P_in_W",
            "T_b_K",
            "n_b",
            "n_bar",
            "gamma_i_Hz",
            "gamma_om_Hz",
            "gamma_Hz",
            "cooperativity",
            "snr_predicted",
        ],
    )
    .meta("seed", setup.seed)
    .meta("averages", setup.averages);
    for (i, p) in points.iter().enumerate() {
        let meta = |kind: &str, stream: u64| {
            vec![
                ("kind", kind.to_string()),
                ("point_index", i.to_string()),
                ("n_c", num(p.truth.n_c)),
                ("averages", setup.averages.to_string()),
                ("seed", setup.seed.to_string()),
                ("stream", stream.to_string()),
            ]
        };
        let sig_path = spectra.join(signal_name(i));
        let bg_path = spectra.join(background_name(i));
        write_spectrum(
            &sig_path,
            &p.signal.spectrum,
            &meta("signal", p.signal.stream),
        )?;
        write_spectrum(
            &bg_path,
            &p.background,
            &meta(
                "background",
                optocool::measurement::stream_for(i as u64, true),
            ),
        )?;
        step.add(sig_path);
        step.add(bg_path);

        calibration.points.push(CalibrationPoint {
            index: i,
            n_c: p.truth.n_c,
            detuning_hz: rad_to_hz(p.drive.detuning),
            intrinsic_linewidth_hz: rad_to_hz(p.truth.gamma_i),
            signal: signal_name(i),
            background: background_name(i),
            record: p.record,
        });
        let t = TruthRecord {
            index: i,
            seed: setup.seed,
            signal_stream: p.signal.stream,
            averages: setup.averages,
            truth: p.truth,
            budget: p.budget,
        };
        let tp = truth_dir.join(format!("point_{i:03}.truth.json"));
        write_json(&tp, &t)?;
        step.add(tp);
        let tr = &p.truth;
        sweep.push(vec![
            i.to_string(),
            num(tr.n_c),
            num(tr.p_in),
            num(tr.t_b),
            num(tr.n_b),
            num(tr.n_bar),
            num(rad_to_hz(tr.gamma_i)),
            num(rad_to_hz(tr.gamma_om)),
            num(rad_to_hz(tr.gamma)),
            num(tr.cooperativity),
            num(p.budget.snr_predicted),
        ]);
        truths.push(t);
    }
    let sweep_path = truth_dir.join("sweep_truth.csv");
    sweep.write(&sweep_path)?;
    step.add(sweep_path);
    let cal_path = out.join(CALIBRATION_FILE);
    let text = toml::to_string(&calibration).map_err(|e| CliError::Data(e.to_string()))?;
    fs::write(&cal_path, text).map_err(io_err(&cal_path))?;
    step.add(cal_path);
    Ok((step.finish()?, truths))
}

fn write_spectrum(path: &Path, s: &Spectrum, meta: &[(&str, String)]) -> Result<(), CliError> {
    let mut buf = Vec::new();
    s.write_csv(&mut buf, meta).map_err(data)?;
    fs::write(path, buf).map_err(io_err(path))
}

fn read_spectrum(path: &Path) -> Result<Spectrum, String> {
    let f = fs::File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Spectrum::read_csv(BufReader::new(f))
        .map(|(s, _)| s)
        .map_err(|e| format!("{}: {e}", path.display()))
}

pub fn simulate(
    cfg: &ExperimentConfig,
    config_bytes: &[u8],
    out: &Path,
) -> Result<RunManifest, CliError> {
    create_dir(out)?;
    let mut manifest = RunManifest::new("simulate", Some(config_bytes));
    manifest.steps.push(simulate_step(cfg, out)?.0);
    manifest.write(out)?;
    Ok(manifest)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    /// The fitted linewidth does not exceed γ_i: nothing to infer, excluded from the aggregate.
    Flagged,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub n_bar: f64,
    pub n_bar_sigma: f64,
    pub n_bar_sigma_monte_carlo: f64,
    pub t_b: f64,
    pub t_b_sigma: f64,
    pub gamma_hz: f64,
    pub gamma_sigma_hz: f64,
    pub omega_m_hz: f64,
    pub integrated_power: f64,
    pub fit_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRow {
    pub index: Option<usize>,
    pub signal: String,
    pub n_c: Option<f64>,
    pub status: RowStatus,
    pub message: Option<String>,
    pub result: Option<PointResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub rows: Vec<AnalysisRow>,
    pub step: StepRecord,
}

impl AnalysisReport {
    pub fn count(&self, status: RowStatus) -> usize {
        self.rows.iter().filter(|r| r.status == status).count()
    }
}

fn analyze_one(dir: &Path, dev: &DeviceEstimate, p: &CalibrationPoint) -> AnalysisRow {
    let mut row = AnalysisRow {
        index: Some(p.index),
        signal: p.signal.clone(),
        n_c: Some(p.n_c),
        status: RowStatus::Error,
        message: None,
        result: None,
    };
    let outcome = (|| -> Result<PointResult, (RowStatus, String)> {
        let err = |m: String| (RowStatus::Error, m);
        let sig = read_spectrum(&dir.join(&p.signal)).map_err(err)?;
        let bg_path = dir.join(&p.background);
        if !bg_path.exists() {
            return Err(err(format!("missing background file {}", p.background)));
        }
        let bg = read_spectrum(&bg_path).map_err(err)?;
        let cavity = CavityParams::new(
            hz_to_rad(dev.optical_frequency_hz),
            hz_to_rad(dev.kappa_hz),
            hz_to_rad(dev.kappa_e_hz),
        )
        .map_err(|e| err(e.to_string()))?;
        let est = system_estimate(
            &cavity,
            hz_to_rad(p.detuning_hz),
            hz_to_rad(p.intrinsic_linewidth_hz),
            &dev.errors,
        );
        let a = analyze_point(&sig, &bg, &p.record, &est).map_err(|e| match e {
            Error::Invalid { name: "gamma", .. } => (RowStatus::Flagged, e.to_string()),
            e => err(e.to_string()),
        })?;
        let t = &a.thermometry;
        Ok(PointResult {
            n_bar: t.n_bar,
            n_bar_sigma: t.n_bar_sigma,
            n_bar_sigma_monte_carlo: t.uncertainty.monte_carlo * t.n_bar,
            t_b: t.t_b,
            t_b_sigma: t.t_b_sigma,
            gamma_hz: rad_to_hz(a.fit.gamma),
            gamma_sigma_hz: rad_to_hz(a.fit.std(2)),
            omega_m_hz: rad_to_hz(a.fit.omega_m),
            integrated_power: a.fit.integrated_power,
            fit_iterations: a.fit.iterations,
        })
    })();
    match outcome {
        Ok(r) => {
            row.status = RowStatus::Ok;
            row.result = Some(r);
        }
        Err((status, m)) => {
            row.status = status;
            row.message = Some(m);
        }
    }
    row
}

/// Fits every calibrated spectrum in `spectra`. Per-file failures become error rows.
pub fn analyze_step(
    spectra: &Path,
    calibration: &Path,
    out: &Path,
    parallelism: usize,
) -> Result<AnalysisReport, CliError> {
    let cal = CalibrationFile::read(calibration)?;
    if !spectra.is_dir() {
        return Err(CliError::Data(format!(
            "{} is not a directory",
            spectra.display()
        )));
    }
    create_dir(out)?;
    let mut step = Step::start("analyze", out);
    let mut rows = pool(parallelism)?.install(|| {
        cal.points
            .par_iter()
            .map(|p| analyze_one(spectra, &cal.device, p))
            .collect::<Vec<_>>()
    });
    let listed: Vec<&str> = cal
        .points
        .iter()
        .flat_map(|p| [p.signal.as_str(), p.background.as_str()])
        .collect();
    let mut orphans: Vec<String> = fs::read_dir(spectra)
        .map_err(io_err(spectra))?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| {
            n.ends_with(".csv") && !n.ends_with(".background.csv") && !listed.contains(&n.as_str())
        })
        .collect();
    orphans.sort();
    rows.extend(orphans.into_iter().map(|n| AnalysisRow {
        index: None,
        signal: n,
        n_c: None,
        status: RowStatus::Error,
        message: Some("no calibration entry for this spectrum".into()),
        result: None,
    }));

    let mut table = Table::new(
        "thermometry",
        &[
            "index",
            "n_c",
            "n_bar",
            "n_bar_sigma",
            "gamma_Hz",
            "gamma_sigma_Hz",
            "T_b_K",
            "T_b_sigma_K",
        ],
    )
    .meta(
        "excluded",
        "rows with status flagged or error, see thermometry.json",
    );
    for r in &rows {
        if let (RowStatus::Ok, Some(x), Some(i), Some(n_c)) = (r.status, &r.result, r.index, r.n_c)
        {
            table.push(vec![
                i.to_string(),
                num(n_c),
                num(x.n_bar),
                num(x.n_bar_sigma),
                num(x.gamma_hz),
                num(x.gamma_sigma_hz),
                num(x.t_b),
                num(x.t_b_sigma),
            ]);
        }
    }
    let csv = out.join("thermometry.csv");
    table.write(&csv)?;
    let json = out.join("thermometry.json");
    write_json(&json, &rows)?;
    step.add(csv);
    step.add(json);
    Ok(AnalysisReport {
        rows,
        step: step.finish()?,
    })
}

pub fn analyze(
    spectra: &Path,
    calibration: &Path,
    out: &Path,
    parallelism: usize,
) -> Result<(RunManifest, AnalysisReport), CliError> {
    let report = analyze_step(spectra, calibration, out, parallelism)?;
    let bytes = fs::read(calibration).map_err(io_err(calibration))?;
    let mut manifest = RunManifest::new("analyze", Some(&bytes));
    manifest.steps.push(report.step.clone());
    manifest.write(out)?;
    Ok((manifest, report))
}

/// Simulate, analyze, then compare the recovered occupancies with the hidden truth.
pub fn cool_curve(
    cfg: &ExperimentConfig,
    config_bytes: &[u8],
    out: &Path,
) -> Result<(RunManifest, AnalysisReport), CliError> {
    create_dir(out)?;
    let mut manifest = RunManifest::new("cool-curve", Some(config_bytes));
    let (sim, truths) = simulate_step(cfg, out)?;
    manifest.steps.push(sim);
    let report = analyze_step(
        &out.join(SPECTRA_DIR),
        &out.join(CALIBRATION_FILE),
        out,
        cfg.parallelism,
    )?;
    manifest.steps.push(report.step.clone());

    let mut step = Step::start("compare", out);
    let mut table = Table::new(
        "cooling_curve",
        &[
            "index",
            "n_c",
            "n_bar_truth",
            "n_bar_ideal",
            "n_bar",
            "n_bar_sigma",
            "relative_error",
            "T_b_truth_K",
            "T_b_K",
            "status",
        ],
    );
    let kappa = cfg.setup.cavity.kappa();
    for (t, r) in truths.iter().zip(&report.rows) {
        let tr = &t.truth;
        let ideal = backaction_rate(cfg.setup.g, tr.n_c, kappa)
            .and_then(|g_om| {
                cooled_occupancy(
                    thermal_occupancy(cfg.bath_temperature, tr.omega_m),
                    cfg.mech.gamma_i0(),
                    g_om,
                    kappa,
                    tr.omega_m,
                )
            })
            .map(|c| c.n_bar)
            .map_err(data)?;
        let (n_bar, sigma, t_b) = match &r.result {
            Some(x) => (num(x.n_bar), num(x.n_bar_sigma), num(x.t_b)),
            None => (String::new(), String::new(), String::new()),
        };
        let rel = r
            .result
            .as_ref()
            .map_or(String::new(), |x| num(x.n_bar / tr.n_bar - 1.0));
        let status = serde_json::to_value(r.status).map_err(|e| CliError::Data(e.to_string()))?;
        table.push(vec![
            t.index.to_string(),
            num(tr.n_c),
            num(tr.n_bar),
            num(ideal),
            n_bar,
            sigma,
            rel,
            num(tr.t_b),
            t_b,
            status.as_str().unwrap_or_default().to_string(),
        ]);
    }
    let path = out.join("cooling_curve.csv");
    table.write(&path)?;
    step.add(path);
    manifest.steps.push(step.finish()?);
    manifest.write(out)?;
    Ok((manifest, report))
}

/// One row of the transparency-width table.
#[derive(Debug, Clone, PartialEq)]
pub struct EitWidth {
    pub n_c: f64,
    pub width_hz: Option<f64>,
    pub expected_hz: f64,
    pub depth: f64,
    pub valid: bool,
}

fn linearized(
    cfg: &ExperimentConfig,
    n_c: f64,
    cavity: CavityParams,
) -> optocool::Result<LinearizedSystem> {
    let op = cfg.operating_point(n_c)?;
    let drive = drive_for_photons(n_c, cfg.setup.omega_m, &cavity)?;
    LinearizedSystem::new(cavity, cfg.setup.omega_m, op.gamma_i, cfg.setup.g, drive)
}

pub fn eit(
    cfg: &ExperimentConfig,
    config_bytes: &[u8],
    out: &Path,
) -> Result<(RunManifest, Vec<EitWidth>), CliError> {
    let dir = out.join("eit");
    create_dir(&dir)?;
    let mut step = Step::start("eit", out);
    let e = &cfg.eit;
    let det = cfg.setup.detector;
    let results = pool(cfg.parallelism)?.install(|| {
        cfg.sweep
            .par_iter()
            .map(|&n_c| {
                let sys = linearized(cfg, n_c, cfg.setup.cavity)?;
                let gamma = sys.gamma_total();
                let grid = FrequencyGrid::centered(
                    rad_to_hz(sys.effective_omega_m()),
                    e.span_linewidths * rad_to_hz(gamma),
                    e.points,
                )?;
                let spec = eit_reflection(&sys, &grid, e.model)?;
                let a_o = probe_amplitude(e.probe_power, cfg.setup.cavity.omega_o())?;
                let readings = spec
                    .reflection
                    .iter()
                    .zip(&spec.group_delay)
                    .map(|(&r, &tau)| {
                        lockin_demodulate(
                            r,
                            tau,
                            a_o,
                            e.modulation_index,
                            &det,
                            e.lockin_frequency,
                            gamma,
                        )
                    })
                    .collect::<optocool::Result<Vec<_>>>()?;
                Ok((sys, spec, readings))
            })
            .collect::<optocool::Result<Vec<_>>>()
    });
    let results = results.map_err(data)?;
    let mut widths = Vec::new();
    let mut summary = Table::new(
        "eit_widths",
        &[
            "index",
            "n_c",
            "dip_width_Hz",
            "expected_width_Hz",
            "dip_depth",
            "valid",
        ],
    )
    .meta("lockin_frequency_Hz", num(rad_to_hz(e.lockin_frequency)))
    .meta(
        "valid",
        "1 when the window exceeds twice the lock-in frequency",
    );
    for (i, (sys, spec, readings)) in results.iter().enumerate() {
        let mut t = Table::new(
            "eit_reflection",
            &[
                "two_photon_detuning_Hz",
                "reflection",
                "phase_rad",
                "group_delay_s",
                "transmission_delay_s",
                "normalized_reflection",
                "lockin_X",
                "lockin_Y",
            ],
        )
        .meta("n_c", num(sys.drive.n_c))
        .meta(
            "model",
            match e.model {
                ReflectionModel::Factorized => "factorized",
                ReflectionModel::FullWeakCoupling => "full",
            },
        );
        for (k, f) in spec.grid.frequencies_hz().enumerate() {
            t.push(vec![
                num(f),
                num(spec.reflection[k]),
                num(spec.phase[k]),
                num(spec.group_delay[k]),
                num(spec.transmission_delay[k]),
                num(spec.normalized[k]),
                num(readings[k].x),
                num(readings[k].y),
            ]);
        }
        let path = dir.join(format!("eit_{i:03}.csv"));
        t.write(&path)?;
        step.add(path);
        let width = spec.dip_width;
        let w = EitWidth {
            n_c: sys.drive.n_c,
            width_hz: width.map(rad_to_hz),
            expected_hz: rad_to_hz(sys.gamma_total()),
            depth: spec.dip_depth,
            valid: width.is_some_and(|w| w > 2.0 * e.lockin_frequency),
        };
        summary.push(vec![
            i.to_string(),
            num(w.n_c),
            w.width_hz.map_or("nan".into(), num),
            num(w.expected_hz),
            num(w.depth),
            u8::from(w.valid).to_string(),
        ]);
        widths.push(w);
    }
    let path = out.join("eit_widths.csv");
    summary.write(&path)?;
    step.add(path);
    let mut manifest = RunManifest::new("eit", Some(config_bytes));
    manifest.steps.push(step.finish()?);
    manifest.write(out)?;
    Ok((manifest, widths))
}

/// Imprecision in phonon units for four detection scenarios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetRow {
    pub n_c: f64,
    pub gamma_hz: f64,
    /// Lossless, noiseless chain on a cavity with κ_e = 2κ.
    pub overcoupled_lossless: f64,
    /// Lossless, noiseless chain on the device cavity.
    pub device_lossless: f64,
    /// Configured transmission, noiseless amplifier.
    pub shot_limited: f64,
    /// Configured transmission and noise figure.
    pub modeled: f64,
    pub snr_shot: f64,
    pub snr_modeled: f64,
}

pub fn budget_rows(cfg: &ExperimentConfig) -> Result<Vec<BudgetRow>, CliError> {
    let s = &cfg.setup;
    let c = s.cavity;
    let overcoupled = CavityParams::new(c.omega_o(), c.kappa(), 2.0 * c.kappa()).map_err(data)?;
    let shot = ChainModel::new(s.chain.transmission, 1.0).map_err(data)?;
    cfg.sweep
        .iter()
        .map(|&n_c| {
            let at = |cavity: CavityParams, chain: ChainModel| -> optocool::Result<NoiseBudget> {
                let sys = linearized(cfg, n_c, cavity)?;
                let op = cfg.operating_point(n_c)?;
                let n_bar = cooled_occupancy(
                    thermal_occupancy(op.t_b, s.omega_m),
                    sys.gamma_i,
                    sys.gamma_om(),
                    c.kappa(),
                    s.omega_m,
                )?
                .n_bar;
                chain.budget(
                    &cavity,
                    &sys.drive,
                    s.g,
                    s.omega_m,
                    sys.gamma_total(),
                    n_bar,
                    &s.detector,
                )
            };
            let oc = at(overcoupled, ChainModel::IDEAL)?;
            let dl = at(c, ChainModel::IDEAL)?;
            let sl = at(c, shot)?;
            let m = at(c, s.chain)?;
            Ok(BudgetRow {
                n_c,
                gamma_hz: rad_to_hz(linearized(cfg, n_c, c)?.gamma_total()),
                overcoupled_lossless: oc.n_imp,
                device_lossless: dl.n_imp,
                shot_limited: sl.n_imp,
                modeled: m.n_imp,
                snr_shot: m.snr_shot,
                snr_modeled: m.snr_predicted,
            })
        })
        .collect::<optocool::Result<Vec<_>>>()
        .map_err(data)
}

pub fn budget(
    cfg: &ExperimentConfig,
    config_bytes: &[u8],
    out: &Path,
) -> Result<(RunManifest, Vec<BudgetRow>), CliError> {
    create_dir(out)?;
    let mut step = Step::start("budget", out);
    let rows = budget_rows(cfg)?;
    let mut t = Table::new(
        "noise_budget",
        &[
            "n_c",
            "gamma_Hz",
            "n_imp_overcoupled_lossless",
            "n_imp_device_lossless",
            "n_imp_shot_limited",
            "n_imp_modeled",
            "snr_shot_dB",
            "snr_modeled_dB",
        ],
    )
    .meta(
        "post_cavity_transmission",
        num(cfg.setup.chain.transmission),
    )
    .meta(
        "noise_figure_dB",
        num(ratio_to_db(cfg.setup.chain.noise_figure)),
    );
    for r in &rows {
        t.push(vec![
            num(r.n_c),
            num(r.gamma_hz),
            num(r.overcoupled_lossless),
            num(r.device_lossless),
            num(r.shot_limited),
            num(r.modeled),
            num(ratio_to_db(r.snr_shot)),
            num(ratio_to_db(r.snr_modeled)),
        ]);
    }
    let path = out.join("budget.csv");
    t.write(&path)?;
    step.add(path);
    let mut manifest = RunManifest::new("budget", Some(config_bytes));
    manifest.steps.push(step.finish()?);
    manifest.write(out)?;
    Ok((manifest, rows))
}

/// Resolves the run directory for commands that take a config.
pub fn run_dir(flag: Option<&Path>, cfg: &ExperimentConfig) -> PathBuf {
    crate::output::output_dir(flag, cfg.output_dir.as_deref())
}
