//! Experiment configuration: TOML with mandatory unit suffixes, resolved into
//! the rad/s and SI values used by the library.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use toml::Spanned;

use optocool::experiment::{InputErrors, OperatingPoint, Setup};
use optocool::measurement::{ChainModel, DetectorParams};
use optocool::model::{intracavity_state, kappa_e_from_contrast, CavityParams, MechParams};
use optocool::quantum::ReflectionModel;
use optocool::thermal::{
    fit_thermal_damping, DampingDecomposition, LinearHeating, PolynomialDamping, PowerLaw,
};
use optocool::units::{db_to_ratio, hz_to_rad};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.key.is_empty()) {
            (Some(l), false) => write!(f, "line {l}: {}: {}", self.key, self.message),
            (Some(l), true) => write!(f, "line {l}: {}", self.message),
            (None, false) => write!(f, "{}: {}", self.key, self.message),
            (None, true) => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

type Q = Option<Spanned<toml::Value>>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    device: RawDevice,
    #[serde(default)]
    detector: RawDetector,
    #[serde(default)]
    chain: RawChain,
    #[serde(default)]
    thermal: RawThermal,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(default)]
    acquisition: RawAcquisition,
    #[serde(default)]
    uncertainty: RawUncertainty,
    #[serde(default)]
    eit: RawEit,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDevice {
    optical_frequency: Q,
    kappa: Q,
    contrast: Option<Spanned<f64>>,
    kappa_e: Q,
    mechanical_frequency: Q,
    intrinsic_linewidth: Q,
    coupling: Q,
    motional_mass: Q,
    bath_temperature: Q,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDetector {
    responsivity: Q,
    transimpedance_gain: Q,
    load: Q,
    electronic_gain: Q,
    edfa_gain: Q,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChain {
    input_transmission: Q,
    post_cavity_transmission: Q,
    taper_transmission: Q,
    noise_figure: Q,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawThermal {
    enabled: Option<bool>,
    heating_rise: Q,
    reference_photons: Option<Spanned<f64>>,
    thermal_damping: Q,
    thermal_reference_rise: Q,
    damping_table: Option<Spanned<String>>,
    damping_degree: Option<Spanned<u32>>,
    free_carrier_damping: Q,
    free_carrier_exponent: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    photons: Option<Spanned<Vec<f64>>>,
    photons_log: Option<Spanned<LogRange>>,
    input_powers: Option<Spanned<Vec<Spanned<toml::Value>>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LogRange {
    start: f64,
    stop: f64,
    points: usize,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAcquisition {
    averages: Option<Spanned<u64>>,
    seed: Option<u64>,
    span_linewidths: Option<Spanned<f64>>,
    points: Option<Spanned<usize>>,
    snr_target: Q,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawUncertainty {
    optical_frequency: Option<f64>,
    kappa: Option<f64>,
    kappa_e: Option<f64>,
    detuning: Option<f64>,
    intrinsic_linewidth: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEit {
    span_linewidths: Option<Spanned<f64>>,
    points: Option<Spanned<usize>>,
    lockin_frequency: Q,
    probe_power: Q,
    modulation_index: Option<Spanned<f64>>,
    model: Option<Spanned<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    directory: Option<PathBuf>,
    parallelism: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dim {
    Frequency,
    Temperature,
    Mass,
    Power,
    Ratio,
    Resistance,
    VoltPerWatt,
    VoltPerAmp,
    AmpPerWatt,
}

impl Dim {
    fn describe(self) -> &'static str {
        match self {
            Dim::Frequency => "a frequency (Hz, kHz, MHz, GHz, THz)",
            Dim::Temperature => "a temperature (K, mK)",
            Dim::Mass => "a mass (kg, g, ng, pg, fg, ag)",
            Dim::Power => "a power (W, mW, uW, nW, pW, dBm)",
            Dim::Ratio => "a ratio (plain number or dB)",
            Dim::Resistance => "a resistance (Ohm, kOhm)",
            Dim::VoltPerWatt => "a gain in V/W",
            Dim::VoltPerAmp => "a gain in V/A",
            Dim::AmpPerWatt => "a responsivity in A/W",
        }
    }

    fn convert(self, x: f64, unit: &str) -> Option<f64> {
        let scale = match (self, unit) {
            (Dim::Frequency, "Hz") => 1.0,
            (Dim::Frequency, "kHz") => 1e3,
            (Dim::Frequency, "MHz") => 1e6,
            (Dim::Frequency, "GHz") => 1e9,
            (Dim::Frequency, "THz") => 1e12,
            (Dim::Temperature, "K") => 1.0,
            (Dim::Temperature, "mK") => 1e-3,
            (Dim::Mass, "kg") => 1.0,
            (Dim::Mass, "g") => 1e-3,
            (Dim::Mass, "mg") => 1e-6,
            (Dim::Mass, "ug" | "µg") => 1e-9,
            (Dim::Mass, "ng") => 1e-12,
            (Dim::Mass, "pg") => 1e-15,
            (Dim::Mass, "fg") => 1e-18,
            (Dim::Mass, "ag") => 1e-21,
            (Dim::Power, "W") => 1.0,
            (Dim::Power, "mW") => 1e-3,
            (Dim::Power, "uW" | "µW") => 1e-6,
            (Dim::Power, "nW") => 1e-9,
            (Dim::Power, "pW") => 1e-12,
            (Dim::Power, "dBm") => return Some(1e-3 * db_to_ratio(x)),
            (Dim::Ratio, "dB") => return Some(db_to_ratio(x)),
            (Dim::Resistance, "Ohm" | "ohm" | "Ω") => 1.0,
            (Dim::Resistance, "kOhm" | "kohm" | "kΩ") => 1e3,
            (Dim::VoltPerWatt, "V/W") => 1.0,
            (Dim::VoltPerAmp, "V/A") => 1.0,
            (Dim::AmpPerWatt, "A/W") => 1.0,
            _ => return None,
        };
        Some(x * scale)
    }
}

/// Splits "3.68 GHz" or "3.68GHz" into (3.68, "GHz").
fn split_quantity(s: &str) -> Option<(f64, &str)> {
    let s = s.trim();
    let mut cut = None;
    for (i, _) in s
        .char_indices()
        .skip(1)
        .chain(std::iter::once((s.len(), ' ')))
    {
        if s[..i].trim().parse::<f64>().is_ok() {
            cut = Some(i);
        }
    }
    let i = cut?;
    Some((s[..i].trim().parse().ok()?, s[i..].trim()))
}

/// Maps config keys and spans to line-numbered errors.
pub(crate) struct Ctx<'a> {
    src: &'a str,
    base_dir: PathBuf,
}

impl<'a> Ctx<'a> {
    fn line(&self, offset: usize) -> usize {
        self.src[..offset.min(self.src.len())].matches('\n').count() + 1
    }

    fn err<T>(
        &self,
        span: Option<std::ops::Range<usize>>,
        key: &str,
        msg: impl Into<String>,
    ) -> Result<T, ConfigError> {
        Err(ConfigError {
            line: span.map(|s| self.line(s.start)),
            key: key.into(),
            message: msg.into(),
        })
    }

    fn quantity(&self, q: &Spanned<toml::Value>, key: &str, dim: Dim) -> Result<f64, ConfigError> {
        let span = Some(q.span());
        let v = match q.get_ref() {
            toml::Value::String(s) => {
                let Some((x, unit)) = split_quantity(s) else {
                    return self.err(
                        span,
                        key,
                        format!("cannot read '{s}' as {}", dim.describe()),
                    );
                };
                if unit.is_empty() && dim != Dim::Ratio {
                    return self.err(
                        span,
                        key,
                        format!("missing unit suffix, expected {}", dim.describe()),
                    );
                }
                let converted = if unit.is_empty() {
                    Some(x)
                } else {
                    dim.convert(x, unit)
                };
                match converted {
                    Some(v) => v,
                    None => {
                        return self.err(
                            span,
                            key,
                            format!("unknown unit '{unit}', expected {}", dim.describe()),
                        )
                    }
                }
            }
            toml::Value::Integer(i) if dim == Dim::Ratio => *i as f64,
            toml::Value::Float(x) if dim == Dim::Ratio => *x,
            toml::Value::Integer(_) | toml::Value::Float(_) => {
                return self.err(
                    span,
                    key,
                    format!(
                        "missing unit suffix, write it as a string like \"1 {}\"",
                        example_unit(dim)
                    ),
                )
            }
            other => {
                return self.err(
                    span,
                    key,
                    format!("expected {}, found {}", dim.describe(), other.type_str()),
                )
            }
        };
        if !v.is_finite() {
            return self.err(span, key, "value must be finite");
        }
        Ok(v)
    }

    fn required(&self, q: &Q, key: &str, dim: Dim) -> Result<f64, ConfigError> {
        match q {
            Some(q) => self.quantity(q, key, dim),
            None => self.err(None, key, "required key is missing"),
        }
    }

    fn optional(&self, q: &Q, key: &str, dim: Dim, default: f64) -> Result<f64, ConfigError> {
        q.as_ref()
            .map_or(Ok(default), |q| self.quantity(q, key, dim))
    }

    fn positive(
        &self,
        q: &Q,
        key: &str,
        dim: Dim,
        default: Option<f64>,
    ) -> Result<f64, ConfigError> {
        let v = match default {
            Some(d) => self.optional(q, key, dim, d)?,
            None => self.required(q, key, dim)?,
        };
        if v <= 0.0 {
            return self.err(
                q.as_ref().map(|q| q.span()),
                key,
                format!("must be positive, got {v}"),
            );
        }
        Ok(v)
    }

    fn fraction(&self, q: &Q, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v = self.optional(q, key, Dim::Ratio, default)?;
        if !(v > 0.0 && v <= 1.0) {
            return self.err(
                q.as_ref().map(|q| q.span()),
                key,
                format!("transmission must lie in (0, 1], got {v}"),
            );
        }
        Ok(v)
    }
}

fn example_unit(dim: Dim) -> &'static str {
    match dim {
        Dim::Frequency => "MHz",
        Dim::Temperature => "K",
        Dim::Mass => "fg",
        Dim::Power => "uW",
        Dim::Ratio => "dB",
        Dim::Resistance => "Ohm",
        Dim::VoltPerWatt => "V/W",
        Dim::VoltPerAmp => "V/A",
        Dim::AmpPerWatt => "A/W",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermalSettings {
    pub heating: LinearHeating,
    pub damping: DampingDecomposition,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EitSettings {
    /// Half span of the two-photon detuning grid in total linewidths.
    pub span_linewidths: f64,
    pub points: usize,
    /// rad/s.
    pub lockin_frequency: f64,
    pub probe_power: f64,
    pub modulation_index: f64,
    pub model: ReflectionModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub setup: Setup,
    pub mech: MechParams,
    pub bath_temperature: f64,
    pub thermal: Option<ThermalSettings>,
    /// Intracavity photon numbers, in sweep order.
    pub sweep: Vec<f64>,
    pub errors: InputErrors,
    pub eit: EitSettings,
    pub output_dir: Option<PathBuf>,
    pub parallelism: usize,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let src = std::fs::read_to_string(path).map_err(|e| ConfigError {
            line: None,
            key: String::new(),
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_str_in(&src, &base)
    }

    /// Parses a config whose relative paths resolve against `base_dir`.
    pub fn from_str_in(src: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let ctx = Ctx {
            src,
            base_dir: base_dir.to_path_buf(),
        };
        let raw: RawConfig = toml::from_str(src).map_err(|e| ConfigError {
            line: e.span().map(|s| ctx.line(s.start)),
            key: String::new(),
            message: e.message().trim().to_string(),
        })?;
        resolve(&ctx, raw)
    }

    /// Operating point for photon number `n_c`: heated bath when thermal models are on.
    pub fn operating_point(&self, n_c: f64) -> optocool::Result<OperatingPoint> {
        match &self.thermal {
            Some(t) => OperatingPoint::heated(n_c, &t.heating, &t.damping),
            None => Ok(OperatingPoint {
                n_c,
                t_b: self.bath_temperature,
                gamma_i: self.mech.gamma_i0(),
            }),
        }
    }
}

fn lib_err(key: &str, e: optocool::Error) -> ConfigError {
    ConfigError {
        line: None,
        key: key.into(),
        message: e.to_string(),
    }
}

fn resolve(ctx: &Ctx, raw: RawConfig) -> Result<ExperimentConfig, ConfigError> {
    let d = &raw.device;
    let omega_o = hz_to_rad(ctx.positive(
        &d.optical_frequency,
        "device.optical_frequency",
        Dim::Frequency,
        None,
    )?);
    let kappa = hz_to_rad(ctx.positive(&d.kappa, "device.kappa", Dim::Frequency, None)?);
    let kappa_e = match (&d.contrast, &d.kappa_e) {
        (Some(_), Some(k)) => {
            return ctx.err(
                Some(k.span()),
                "device.kappa_e",
                "give either contrast or kappa_e, not both",
            )
        }
        (Some(c), None) => kappa_e_from_contrast(*c.get_ref(), kappa)
            .or_else(|e| ctx.err(Some(c.span()), "device.contrast", e.to_string()))?,
        (None, Some(_)) => {
            hz_to_rad(ctx.positive(&d.kappa_e, "device.kappa_e", Dim::Frequency, None)?)
        }
        (None, None) => return ctx.err(None, "device", "one of contrast or kappa_e is required"),
    };
    let cavity = CavityParams::new(omega_o, kappa, kappa_e).map_err(|e| lib_err("device", e))?;
    let omega_m = hz_to_rad(ctx.positive(
        &d.mechanical_frequency,
        "device.mechanical_frequency",
        Dim::Frequency,
        None,
    )?);
    let gamma_i0 = hz_to_rad(ctx.positive(
        &d.intrinsic_linewidth,
        "device.intrinsic_linewidth",
        Dim::Frequency,
        None,
    )?);
    let g = hz_to_rad(ctx.required(&d.coupling, "device.coupling", Dim::Frequency)?);
    if g < 0.0 {
        return ctx.err(
            d.coupling.as_ref().map(|q| q.span()),
            "device.coupling",
            "must be non-negative",
        );
    }
    let mass = ctx.positive(
        &d.motional_mass,
        "device.motional_mass",
        Dim::Mass,
        Some(311e-18),
    )?;
    let mech = MechParams::new(omega_m, gamma_i0, mass).map_err(|e| lib_err("device", e))?;
    let t_b = ctx.positive(
        &d.bath_temperature,
        "device.bath_temperature",
        Dim::Temperature,
        None,
    )?;

    let dt = &raw.detector;
    let defaults = DetectorParams::default();
    let detector = DetectorParams {
        responsivity: ctx.positive(
            &dt.responsivity,
            "detector.responsivity",
            Dim::AmpPerWatt,
            Some(defaults.responsivity),
        )?,
        transimpedance_gain: ctx.positive(
            &dt.transimpedance_gain,
            "detector.transimpedance_gain",
            Dim::VoltPerAmp,
            Some(defaults.transimpedance_gain),
        )?,
        load: ctx.positive(
            &dt.load,
            "detector.load",
            Dim::Resistance,
            Some(defaults.load),
        )?,
        electronic_gain: ctx.positive(
            &dt.electronic_gain,
            "detector.electronic_gain",
            Dim::VoltPerWatt,
            Some(defaults.electronic_gain),
        )?,
        edfa_gain: ctx.positive(
            &dt.edfa_gain,
            "detector.edfa_gain",
            Dim::Ratio,
            Some(defaults.edfa_gain),
        )?,
    };

    let ch = &raw.chain;
    let l_0 = ctx.fraction(&ch.input_transmission, "chain.input_transmission", 0.8262)?;
    let l_1 = ctx.fraction(
        &ch.post_cavity_transmission,
        "chain.post_cavity_transmission",
        0.7638,
    )?;
    let l_taper = ctx.fraction(&ch.taper_transmission, "chain.taper_transmission", 0.7)?;
    let nf = ctx.optional(
        &ch.noise_figure,
        "chain.noise_figure",
        Dim::Ratio,
        db_to_ratio(5.0),
    )?;
    let chain = ChainModel::new(l_1, nf).or_else(|e| {
        ctx.err(
            ch.noise_figure.as_ref().map(|q| q.span()),
            "chain.noise_figure",
            e.to_string(),
        )
    })?;

    let thermal = resolve_thermal(ctx, &raw.thermal, &mech, t_b)?;
    let sweep = resolve_sweep(ctx, &raw.sweep, &cavity, omega_m)?;

    let a = &raw.acquisition;
    let averages = a.averages.as_ref().map_or(1000, |s| *s.get_ref());
    if averages == 0 {
        return ctx.err(
            a.averages.as_ref().map(|s| s.span()),
            "acquisition.averages",
            "must be at least 1",
        );
    }
    let span_linewidths = a.span_linewidths.as_ref().map_or(10.0, |s| *s.get_ref());
    if !(span_linewidths > 0.0 && span_linewidths.is_finite()) {
        return ctx.err(
            a.span_linewidths.as_ref().map(|s| s.span()),
            "acquisition.span_linewidths",
            "must be positive",
        );
    }
    let grid_points = a.points.as_ref().map_or(801, |s| *s.get_ref());
    if grid_points < 16 {
        return ctx.err(
            a.points.as_ref().map(|s| s.span()),
            "acquisition.points",
            "need at least 16 points",
        );
    }
    let snr_target = match &a.snr_target {
        Some(_) => Some(ctx.positive(&a.snr_target, "acquisition.snr_target", Dim::Ratio, None)?),
        None => None,
    };

    let u = &raw.uncertainty;
    let de = InputErrors::default();
    let errors = InputErrors {
        omega_o: u.optical_frequency.unwrap_or(de.omega_o),
        kappa: u.kappa.unwrap_or(de.kappa),
        kappa_e: u.kappa_e.unwrap_or(de.kappa_e),
        detuning: u.detuning.unwrap_or(de.detuning),
        gamma_i: u.intrinsic_linewidth.unwrap_or(de.gamma_i),
    };
    for (k, v) in [
        ("uncertainty.optical_frequency", errors.omega_o),
        ("uncertainty.kappa", errors.kappa),
        ("uncertainty.kappa_e", errors.kappa_e),
        ("uncertainty.detuning", errors.detuning),
        ("uncertainty.intrinsic_linewidth", errors.gamma_i),
    ] {
        if !(v >= 0.0 && v.is_finite()) {
            return ctx.err(
                None,
                k,
                format!("relative error must be non-negative, got {v}"),
            );
        }
    }

    let e = &raw.eit;
    let model = match e.model.as_ref().map(|s| (s.get_ref().as_str(), s.span())) {
        None | Some(("factorized", _)) => ReflectionModel::Factorized,
        Some(("full", _)) => ReflectionModel::FullWeakCoupling,
        Some((other, span)) => {
            return ctx.err(
                Some(span),
                "eit.model",
                format!("unknown model '{other}', expected factorized or full"),
            )
        }
    };
    let eit = EitSettings {
        span_linewidths: e.span_linewidths.as_ref().map_or(5.0, |s| *s.get_ref()),
        points: e.points.as_ref().map_or(2001, |s| *s.get_ref()),
        lockin_frequency: hz_to_rad(ctx.positive(
            &e.lockin_frequency,
            "eit.lockin_frequency",
            Dim::Frequency,
            Some(100e3),
        )?),
        probe_power: ctx.positive(&e.probe_power, "eit.probe_power", Dim::Power, Some(1e-6))?,
        modulation_index: e.modulation_index.as_ref().map_or(0.1, |s| *s.get_ref()),
        model,
    };
    if eit.span_linewidths.is_nan() || eit.span_linewidths <= 0.0 {
        return ctx.err(
            e.span_linewidths.as_ref().map(|s| s.span()),
            "eit.span_linewidths",
            "must be positive",
        );
    }
    if eit.points < 16 {
        return ctx.err(
            e.points.as_ref().map(|s| s.span()),
            "eit.points",
            "need at least 16 points",
        );
    }
    if eit.modulation_index.is_nan() || eit.modulation_index <= 0.0 {
        return ctx.err(
            e.modulation_index.as_ref().map(|s| s.span()),
            "eit.modulation_index",
            "must be positive",
        );
    }

    Ok(ExperimentConfig {
        setup: Setup {
            cavity,
            omega_m,
            g,
            detector,
            chain,
            l_0,
            l_taper,
            span_linewidths,
            grid_points,
            averages,
            seed: a.seed.unwrap_or(1),
            snr_target,
        },
        mech,
        bath_temperature: t_b,
        thermal,
        sweep,
        errors,
        eit,
        output_dir: raw.output.directory.clone(),
        parallelism: raw.output.parallelism.unwrap_or(0),
    })
}

fn resolve_thermal(
    ctx: &Ctx,
    t: &RawThermal,
    mech: &MechParams,
    t_b: f64,
) -> Result<Option<ThermalSettings>, ConfigError> {
    if !t.enabled.unwrap_or(false) {
        return Ok(None);
    }
    let rise = ctx.optional(
        &t.heating_rise,
        "thermal.heating_rise",
        Dim::Temperature,
        13.2,
    )?;
    let n_ref = t
        .reference_photons
        .as_ref()
        .map_or(2000.0, |s| *s.get_ref());
    if n_ref.is_nan() || n_ref <= 0.0 || rise < 0.0 {
        return ctx.err(
            None,
            "thermal",
            "heating_rise must be non-negative and reference_photons positive",
        );
    }
    let heating = LinearHeating {
        base: t_b,
        rise_at_reference: rise,
        reference_photons: n_ref,
    };
    let mut damping = DampingDecomposition::synthetic_default(mech.gamma_i0(), t_b);
    if let Some(table) = &t.damping_table {
        let path = ctx.base_dir.join(table.get_ref());
        let samples = read_q_table(&path)
            .or_else(|m| ctx.err(Some(table.span()), "thermal.damping_table", m))?;
        let degree = t.damping_degree.as_ref().map_or(3, |s| *s.get_ref()) as usize;
        damping.thermal =
            fit_thermal_damping(&samples, mech.omega_m(), mech.gamma_i0(), t_b, degree)
                .or_else(|e| ctx.err(Some(table.span()), "thermal.damping_table", e.to_string()))?;
    } else if t.thermal_damping.is_some() || t.thermal_reference_rise.is_some() {
        let at = hz_to_rad(ctx.optional(
            &t.thermal_damping,
            "thermal.thermal_damping",
            Dim::Frequency,
            17.571e3,
        )?);
        let dt = ctx.positive(
            &t.thermal_reference_rise,
            "thermal.thermal_reference_rise",
            Dim::Temperature,
            Some(19.0),
        )?;
        damping.thermal = PolynomialDamping {
            t_ref: t_b,
            t_max: 300.0,
            coeffs: vec![0.0, at / (dt * dt)],
        };
    }
    if t.free_carrier_damping.is_some() || t.free_carrier_exponent.is_some() {
        let a = hz_to_rad(ctx.optional(
            &t.free_carrier_damping,
            "thermal.free_carrier_damping",
            Dim::Frequency,
            10.708,
        )?);
        damping.free_carrier = PowerLaw::new(a, t.free_carrier_exponent.unwrap_or(1.0));
    }
    Ok(Some(ThermalSettings { heating, damping }))
}

/// Two-column CSV with header `T_K,Q_m`.
fn read_q_table(path: &Path) -> Result<Vec<(f64, f64)>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut rows = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    match rows.next() {
        Some((_, h)) if h.replace(' ', "") == "T_K,Q_m" => {}
        _ => return Err(format!("{}: expected header 'T_K,Q_m'", path.display())),
    }
    rows.map(|(i, l)| {
        let mut it = l.split(',').map(|s| s.trim().parse::<f64>());
        match (it.next(), it.next(), it.next()) {
            (Some(Ok(t)), Some(Ok(q)), None) => Ok((t, q)),
            _ => Err(format!(
                "{}:{}: expected two numbers",
                path.display(),
                i + 1
            )),
        }
    })
    .collect()
}

fn resolve_sweep(
    ctx: &Ctx,
    s: &RawSweep,
    cavity: &CavityParams,
    omega_m: f64,
) -> Result<Vec<f64>, ConfigError> {
    let given = [
        s.photons.is_some(),
        s.photons_log.is_some(),
        s.input_powers.is_some(),
    ]
    .iter()
    .filter(|&&b| b)
    .count();
    if given > 1 {
        return ctx.err(
            None,
            "sweep",
            "give only one of photons, photons_log or input_powers",
        );
    }
    let check = |v: f64, span: std::ops::Range<usize>| -> Result<f64, ConfigError> {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            ctx.err(
                Some(span),
                "sweep",
                format!("photon numbers must be positive, got {v}"),
            )
        }
    };
    if let Some(p) = &s.photons {
        return p.get_ref().iter().map(|&v| check(v, p.span())).collect();
    }
    if let Some(r) = &s.photons_log {
        let LogRange {
            start,
            stop,
            points,
        } = *r.get_ref();
        check(start, r.span())?;
        check(stop, r.span())?;
        return Ok(match points {
            0 => vec![],
            1 => vec![start],
            n => (0..n)
                .map(|k| start * (stop / start).powf(k as f64 / (n - 1) as f64))
                .collect(),
        });
    }
    if let Some(p) = &s.input_powers {
        return p
            .get_ref()
            .iter()
            .map(|q| {
                let watts = ctx.quantity(q, "sweep.input_powers", Dim::Power)?;
                let drive = intracavity_state(watts, omega_m, cavity)
                    .map_err(|e| lib_err("sweep.input_powers", e))?;
                check(drive.n_c, q.span())
            })
            .collect();
    }
    Ok(vec![])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantities_split() {
        assert_eq!(split_quantity("3.68 GHz"), Some((3.68, "GHz")));
        assert_eq!(split_quantity("1e-3W"), Some((1e-3, "W")));
        assert_eq!(split_quantity("-1.17 dB"), Some((-1.17, "dB")));
        assert_eq!(split_quantity("0.5"), Some((0.5, "")));
        assert_eq!(split_quantity("GHz"), None);
    }

    #[test]
    fn units_convert() {
        assert_eq!(Dim::Frequency.convert(2.0, "kHz"), Some(2e3));
        assert_eq!(Dim::Mass.convert(311.0, "fg"), Some(311e-18));
        assert!((Dim::Power.convert(0.0, "dBm").unwrap() - 1e-3).abs() < 1e-18);
        assert_eq!(Dim::Frequency.convert(1.0, "K"), None);
    }
}
