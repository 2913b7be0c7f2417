//! Physical constants and unit conversions.

use std::f64::consts::PI;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// CODATA 2018 exact/recommended values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub k_b: f64,
}

pub const CODATA: PhysicalConstants = PhysicalConstants {
    hbar: HBAR,
    k_b: K_B,
};

impl Default for PhysicalConstants {
    fn default() -> Self {
        CODATA
    }
}

#[inline]
pub fn hz_to_rad(f_hz: f64) -> f64 {
    2.0 * PI * f_hz
}

#[inline]
pub fn rad_to_hz(omega: f64) -> f64 {
    omega / (2.0 * PI)
}

/// Power ratio from decibels.
#[inline]
pub fn db_to_ratio(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[inline]
pub fn ratio_to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

/// Vacuum wavelength of an optical angular frequency.
#[inline]
pub fn wavelength_of(omega: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / omega
}
