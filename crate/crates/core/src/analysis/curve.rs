use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance, in combined standard deviations, for following and plateau membership.
const K_SIGMA: f64 = 2.5;
/// A scan ends after this many consecutive points fail the tolerance.
const MAX_CONSECUTIVE_MISSES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t_c: f64,
    pub t_b: f64,
    pub t_b_sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub t_c: f64,
    pub t_b: f64,
    pub t_b_sigma: f64,
    pub following: bool,
    pub plateau: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub mean: f64,
    /// Scatter of the plateau points.
    pub std: f64,
    pub points: usize,
    /// Highest cryostat temperature assigned to the plateau.
    pub upper_t_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermometryCurve {
    pub rows: Vec<CurveRow>,
    pub plateau: Option<Plateau>,
    /// Lowest cryostat temperature at which the mode still follows it.
    pub onset: Option<f64>,
}

/// Mode temperature against cryostat temperature with saturation detection.
pub fn mode_thermometry_curve(points: &[CurvePoint]) -> Result<ThermometryCurve> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "a thermometry curve needs at least 3 points, got {}",
            points.len()
        )));
    }
    for p in points {
        if !(p.t_c.is_finite()
            && p.t_b.is_finite()
            && p.t_b_sigma.is_finite()
            && p.t_b_sigma >= 0.0)
        {
            return Err(Error::NonFinite {
                name: "curve point",
                value: f64::NAN,
            });
        }
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.t_c.total_cmp(&b.t_c));
    let mut rows: Vec<CurveRow> = sorted
        .iter()
        .map(|p| CurveRow {
            t_c: p.t_c,
            t_b: p.t_b,
            t_b_sigma: p.t_b_sigma,
            following: false,
            plateau: false,
        })
        .collect();

    let tol = |sigma: f64, scale: f64| K_SIGMA * sigma + 1e-9 * scale.abs();
    let mut onset = None;
    let mut misses = 0;
    for row in rows.iter_mut().rev() {
        if (row.t_b - row.t_c).abs() <= tol(row.t_b_sigma, row.t_c) {
            row.following = true;
            onset = Some(row.t_c);
            misses = 0;
        } else {
            misses += 1;
            if misses == MAX_CONSECUTIVE_MISSES {
                break;
            }
        }
    }
    if let Some(t) = onset {
        for row in rows.iter_mut().filter(|r| r.t_c < t) {
            row.following = false;
        }
    }

    let (mut sum, mut sum_w, mut count) = (0.0f64, 0.0f64, 0usize);
    let mut misses = 0;
    let stop = onset.unwrap_or(f64::INFINITY);
    for row in rows.iter_mut().take_while(|r| r.t_c < stop) {
        if count > 0 {
            let mean = sum / sum_w;
            let mean_sigma = (1.0 / sum_w).sqrt();
            let combined = (row.t_b_sigma.powi(2) + mean_sigma.powi(2)).sqrt();
            if (row.t_b - mean).abs() > tol(combined, mean) {
                misses += 1;
                if misses == MAX_CONSECUTIVE_MISSES {
                    break;
                }
                continue;
            }
        }
        misses = 0;
        let w = 1.0 / row.t_b_sigma.powi(2).max(1e-300);
        sum += w * row.t_b;
        sum_w += w;
        count += 1;
        row.plateau = true;
    }
    let plateau = if count >= 3 {
        let members: Vec<&CurveRow> = rows.iter().filter(|r| r.plateau).collect();
        let n = members.len() as f64;
        let mean = members.iter().map(|r| r.t_b).sum::<f64>() / n;
        let std = (members.iter().map(|r| (r.t_b - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        Some(Plateau {
            mean: sum / sum_w,
            std,
            points: count,
            upper_t_c: members.last().map(|r| r.t_c).unwrap_or(f64::NAN),
        })
    } else {
        for r in rows.iter_mut() {
            r.plateau = false;
        }
        None
    };
    Ok(ThermometryCurve {
        rows,
        plateau,
        onset,
    })
}
