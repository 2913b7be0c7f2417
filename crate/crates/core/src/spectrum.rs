//! Uniformly sampled power spectral densities and their CSV representation.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{positive, Error, Result};

pub const SPECTRUM_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sidedness {
    Single,
    Double,
}

impl fmt::Display for Sidedness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sidedness::Single => "single",
            Sidedness::Double => "double",
        })
    }
}

impl FromStr for Sidedness {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "single" => Ok(Sidedness::Single),
            "double" => Ok(Sidedness::Double),
            other => Err(Error::Format(format!("unknown sidedness '{other}'"))),
        }
    }
}

/// Uniform grid in ordinary frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    start_hz: f64,
    step_hz: f64,
    len: usize,
}

impl FrequencyGrid {
    pub fn new(start_hz: f64, step_hz: f64, len: usize) -> Result<Self> {
        crate::error::finite("start_hz", start_hz)?;
        positive("step_hz", step_hz)?;
        if len < 2 {
            return Err(Error::InsufficientData(format!(
                "a grid needs at least 2 points, got {len}"
            )));
        }
        Ok(Self {
            start_hz,
            step_hz,
            len,
        })
    }

    /// `len` points spanning center ± half_span.
    pub fn centered(center_hz: f64, half_span_hz: f64, len: usize) -> Result<Self> {
        positive("half_span_hz", half_span_hz)?;
        if len < 2 {
            return Err(Error::InsufficientData(format!(
                "a grid needs at least 2 points, got {len}"
            )));
        }
        Self::new(
            center_hz - half_span_hz,
            2.0 * half_span_hz / (len - 1) as f64,
            len,
        )
    }

    /// Rebuilds a grid from explicit samples, rejecting non-uniform spacing.
    pub fn from_frequencies(freqs: &[f64]) -> Result<Self> {
        if freqs.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "a grid needs at least 2 points, got {}",
                freqs.len()
            )));
        }
        let n = freqs.len();
        let step = (freqs[n - 1] - freqs[0]) / (n - 1) as f64;
        let grid = Self::new(freqs[0], step, n)?;
        let tol = 1e-6 * step;
        for (i, &f) in freqs.iter().enumerate() {
            if (f - grid.frequency_hz(i)).abs() > tol {
                return Err(Error::GridMismatch(format!(
                    "non-uniform grid: sample {i} at {f} Hz, expected {} Hz",
                    grid.frequency_hz(i)
                )));
            }
        }
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.len
    }
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
    pub fn start_hz(&self) -> f64 {
        self.start_hz
    }
    pub fn step_hz(&self) -> f64 {
        self.step_hz
    }
    pub fn stop_hz(&self) -> f64 {
        self.frequency_hz(self.len - 1)
    }

    pub fn frequency_hz(&self, i: usize) -> f64 {
        self.start_hz + i as f64 * self.step_hz
    }

    pub fn omega(&self, i: usize) -> f64 {
        2.0 * PI * self.frequency_hz(i)
    }

    pub fn frequencies_hz(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|i| self.frequency_hz(i))
    }

    pub fn omegas(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|i| self.omega(i))
    }

    pub fn contains_omega(&self, omega: f64) -> bool {
        let f = omega / (2.0 * PI);
        f >= self.start_hz && f <= self.stop_hz()
    }

    pub fn same_as(&self, other: &FrequencyGrid) -> bool {
        self.len == other.len
            && (self.start_hz - other.start_hz).abs() <= 1e-9 * self.step_hz
            && (self.step_hz - other.step_hz).abs() <= 1e-9 * self.step_hz
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub grid: FrequencyGrid,
    pub values: Vec<f64>,
    pub unit: String,
    pub sidedness: Sidedness,
}

impl Spectrum {
    pub fn new(
        grid: FrequencyGrid,
        values: Vec<f64>,
        unit: impl Into<String>,
        sidedness: Sidedness,
    ) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a {}-point grid",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            values,
            unit: unit.into(),
            sidedness,
        })
    }

    pub fn from_fn(
        grid: FrequencyGrid,
        unit: impl Into<String>,
        sidedness: Sidedness,
        f: impl Fn(f64) -> f64,
    ) -> Self {
        let values = grid.omegas().map(f).collect();
        Self {
            grid,
            values,
            unit: unit.into(),
            sidedness,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Trapezoidal integral over ordinary frequency.
    pub fn integrate(&self) -> f64 {
        let v = &self.values;
        let n = v.len();
        let inner: f64 = v[1..n - 1].iter().sum();
        self.grid.step_hz() * (inner + 0.5 * (v[0] + v[n - 1]))
    }

    /// Index and value of the largest sample.
    pub fn peak(&self) -> (usize, f64) {
        self.values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| {
                if v > best.1 {
                    (i, v)
                } else {
                    best
                }
            })
    }

    pub fn scaled(&self, factor: f64) -> Spectrum {
        Spectrum {
            values: self.values.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }

    pub fn check_compatible(&self, other: &Spectrum) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        if self.unit != other.unit || self.sidedness != other.sidedness {
            return Err(Error::GridMismatch(format!(
                "units/sidedness differ: {} {} vs {} {}",
                self.unit, self.sidedness, other.unit, other.sidedness
            )));
        }
        Ok(())
    }

    /// Writes the spectrum as CSV with `#` metadata lines ahead of the header row.
    pub fn write_csv<W: Write>(&self, mut w: W, metadata: &[(&str, String)]) -> Result<()> {
        writeln!(w, "# schema_version: {SPECTRUM_SCHEMA_VERSION}")?;
        writeln!(w, "# unit: {}", self.unit)?;
        writeln!(w, "# sidedness: {}", self.sidedness)?;
        for (k, v) in metadata {
            writeln!(w, "# {k}: {v}")?;
        }
        writeln!(w, "frequency_Hz,psd_value")?;
        for (f, v) in self.grid.frequencies_hz().zip(&self.values) {
            writeln!(w, "{f:e},{v:e}")?;
        }
        Ok(())
    }

    /// Reads a spectrum written by [`Spectrum::write_csv`]. Returns extra metadata pairs.
    pub fn read_csv<R: BufRead>(r: R) -> Result<(Spectrum, Vec<(String, String)>)> {
        let mut unit = None;
        let mut sidedness = None;
        let mut meta = Vec::new();
        let mut header_seen = false;
        let mut freqs = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let (k, v) = rest.split_once(':').ok_or_else(|| {
                    Error::Format(format!("line {}: malformed metadata '{line}'", lineno + 1))
                })?;
                let (k, v) = (k.trim(), v.trim());
                match k {
                    "schema_version" => {
                        let ver: u32 = v.parse().map_err(|_| {
                            Error::Format(format!("line {}: bad schema version '{v}'", lineno + 1))
                        })?;
                        if ver != SPECTRUM_SCHEMA_VERSION {
                            return Err(Error::Format(format!("unsupported schema version {ver}")));
                        }
                    }
                    "unit" => unit = Some(v.to_string()),
                    "sidedness" => sidedness = Some(v.parse::<Sidedness>()?),
                    _ => meta.push((k.to_string(), v.to_string())),
                }
                continue;
            }
            if !header_seen {
                if line.replace(' ', "") != "frequency_Hz,psd_value" {
                    return Err(Error::Format(format!(
                        "line {}: expected header 'frequency_Hz,psd_value'",
                        lineno + 1
                    )));
                }
                header_seen = true;
                continue;
            }
            let (f, v) = line.split_once(',').ok_or_else(|| {
                Error::Format(format!("line {}: expected two columns", lineno + 1))
            })?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| {
                        Error::Format(format!("line {}: bad number '{}'", lineno + 1, s.trim()))
                    })
            };
            freqs.push(parse(f)?);
            values.push(parse(v)?);
        }
        let unit = unit.ok_or_else(|| Error::Format("missing '# unit:' line".into()))?;
        let sidedness =
            sidedness.ok_or_else(|| Error::Format("missing '# sidedness:' line".into()))?;
        let grid = FrequencyGrid::from_frequencies(&freqs)?;
        Ok((Spectrum::new(grid, values, unit, sidedness)?, meta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_round_trip() {
        let g = FrequencyGrid::centered(3.68e9, 1e6, 101).unwrap();
        let f: Vec<f64> = g.frequencies_hz().collect();
        let g2 = FrequencyGrid::from_frequencies(&f).unwrap();
        assert!(g.same_as(&g2));
        assert!((g.frequency_hz(50) - 3.68e9).abs() < 1e-3);
    }

    #[test]
    fn non_uniform_grid_rejected() {
        assert!(FrequencyGrid::from_frequencies(&[0.0, 1.0, 3.0]).is_err());
    }

    #[test]
    fn trapezoid_exact_for_linear() {
        let g = FrequencyGrid::new(0.0, 0.5, 5).unwrap();
        let s = Spectrum::from_fn(g, "1", Sidedness::Single, |w| w / (2.0 * PI));
        assert!((s.integrate() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let g = FrequencyGrid::centered(3.68e9, 2e6, 21).unwrap();
        let s = Spectrum::from_fn(g, "W/Hz", Sidedness::Single, |w| {
            1e-12 / (1.0 + (w - 2.0 * PI * 3.68e9).powi(2) / 1e12)
        });
        let mut buf = Vec::new();
        s.write_csv(&mut buf, &[("seed", "7".to_string())]).unwrap();
        let (back, meta) = Spectrum::read_csv(&buf[..]).unwrap();
        assert_eq!(back.values, s.values);
        assert_eq!(back.unit, "W/Hz");
        assert_eq!(meta, vec![("seed".to_string(), "7".to_string())]);
    }

    #[test]
    fn csv_errors_are_reported() {
        let txt = "# unit: W/Hz\n# sidedness: single\nfrequency_Hz,psd_value\n1,2\n2,abc\n";
        assert!(matches!(
            Spectrum::read_csv(txt.as_bytes()),
            Err(Error::Format(_))
        ));
        let txt = "# sidedness: single\nfrequency_Hz,psd_value\n1,2\n2,3\n";
        assert!(Spectrum::read_csv(txt.as_bytes()).is_err());
    }
}
