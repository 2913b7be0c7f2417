use serde::{Deserialize, Serialize};

use crate::error::{non_negative, positive, Error, Result};

/// Raw calibration-chain observables for one measurement.
///
/// Index 0 is the forward taper direction, 1 the reversed one. Primed powers are
/// recorded with the taper coupled to the device, unprimed with it retracted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    /// Power entering the taper, each direction, W.
    pub p_0: f64,
    pub p_1: f64,
    /// Transmission of the bare taper (device uncoupled).
    pub l_taper: f64,
    pub p_rsa_0: f64,
    pub p_rsa_0_coupled: f64,
    pub p_rsa_1: f64,
    pub p_rsa_1_coupled: f64,
    /// Thermo-optic resonance shifts for each direction, m.
    pub shift_0: f64,
    pub shift_1: f64,
    /// Photodiode DC voltage and the optical power at the RSA path that produced it.
    pub v_dc: f64,
    pub p_rsa_dc: f64,
    pub g_edfa: f64,
    pub load: f64,
    /// Power at the RSA path during the measurement, device coupled, W.
    pub p_rsa_measure: f64,
    /// Allowed relative disagreement of the two insertion-loss products.
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InsertionLosses {
    /// Taper-input to device transmission.
    pub l_0: f64,
    /// Device to taper-output transmission.
    pub l_1: f64,
    pub product: f64,
    /// Product estimated from the reversed direction.
    pub product_reversed: f64,
    pub consistent: bool,
    /// Relative uncertainty of the device input power from the loss asymmetry.
    pub input_power_uncertainty: f64,
}

impl CalibrationRecord {
    /// Forward model: the record a chain with the given losses would produce.
    #[allow(clippy::too_many_arguments)]
    pub fn synthesize(
        l_0: f64,
        l_1: f64,
        l_taper: f64,
        p_0: f64,
        p_1: f64,
        shift_per_watt: f64,
        path_transmission: f64,
        g_e: f64,
        load: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("l_0", l_0),
            ("l_1", l_1),
            ("l_taper", l_taper),
            ("p_0", p_0),
            ("p_1", p_1),
            ("shift_per_watt", shift_per_watt),
            ("path_transmission", path_transmission),
            ("g_e", g_e),
            ("load", load),
        ] {
            positive(name, v)?;
        }
        let p_rsa_0 = p_0 * l_taper * path_transmission;
        let p_rsa_1 = p_1 * l_taper * path_transmission;
        Ok(Self {
            p_0,
            p_1,
            l_taper,
            p_rsa_0,
            p_rsa_0_coupled: p_0 * l_0 * l_1 * path_transmission,
            p_rsa_1,
            p_rsa_1_coupled: p_1 * l_0 * l_1 * path_transmission,
            shift_0: shift_per_watt * p_0 * l_0,
            shift_1: shift_per_watt * p_1 * l_1,
            v_dc: g_e * p_rsa_0,
            p_rsa_dc: p_rsa_0,
            g_edfa: 1.0,
            load,
            p_rsa_measure: p_0 * l_0 * l_1 * path_transmission,
            tolerance: 1e-2,
        })
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("p_0", self.p_0),
            ("p_1", self.p_1),
            ("l_taper", self.l_taper),
            ("p_rsa_0", self.p_rsa_0),
            ("p_rsa_0_coupled", self.p_rsa_0_coupled),
            ("p_rsa_1", self.p_rsa_1),
            ("p_rsa_1_coupled", self.p_rsa_1_coupled),
            ("shift_0", self.shift_0),
            ("shift_1", self.shift_1),
            ("v_dc", self.v_dc),
            ("p_rsa_dc", self.p_rsa_dc),
            ("g_edfa", self.g_edfa),
            ("load", self.load),
            ("p_rsa_measure", self.p_rsa_measure),
            ("tolerance", self.tolerance),
        ] {
            positive(name, v)?;
        }
        Ok(())
    }

    /// Photodiode electronic gain, V/W.
    pub fn electronic_gain(&self) -> f64 {
        self.v_dc / self.p_rsa_dc
    }

    /// Two-directional insertion-loss solve.
    pub fn insertion_losses(&self) -> Result<InsertionLosses> {
        self.validate()?;
        let ratio = (self.shift_0 / self.shift_1) * (self.p_1 / self.p_0);
        let product = self.l_taper * self.p_rsa_0_coupled / self.p_rsa_0;
        let product_reversed = self.l_taper * self.p_rsa_1_coupled / self.p_rsa_1;
        let l_0 = (product * ratio).sqrt();
        let l_1 = (product / ratio).sqrt();
        for (name, v) in [("l_0", l_0), ("l_1", l_1)] {
            if !(v > 0.0 && v <= 1.0 + 1e-12) {
                return Err(Error::OutOfRange {
                    name,
                    value: v,
                    lo: 0.0,
                    hi: 1.0,
                });
            }
        }
        let consistent = ((product_reversed - product) / product).abs() <= self.tolerance;
        Ok(InsertionLosses {
            l_0,
            l_1,
            product,
            product_reversed,
            consistent,
            input_power_uncertainty: ((l_0 / l_1).sqrt() - 1.0).abs(),
        })
    }

    /// Optical power delivered to the device during the measurement, W.
    pub fn input_power(&self) -> Result<f64> {
        Ok(self.p_0 * self.insertion_losses()?.l_0)
    }

    /// Probe modulation depth from the electrical power of the demodulation tone.
    pub fn modulation_depth(&self, p_omega: f64) -> Result<f64> {
        non_negative("p_omega", p_omega)?;
        self.validate()?;
        Ok((2.0 * p_omega * self.load).sqrt()
            / (self.g_edfa * self.electronic_gain() * self.p_rsa_measure))
    }

    /// Tone power a modulation depth `beta` would produce; inverse of [`Self::modulation_depth`].
    pub fn tone_power(&self, beta: f64) -> f64 {
        let v = self.g_edfa * self.electronic_gain() * self.p_rsa_measure * beta;
        v * v / (2.0 * self.load)
    }
}

pub fn extract_insertion_losses(record: &CalibrationRecord) -> Result<InsertionLosses> {
    record.insertion_losses()
}

pub fn modulation_depth(p_omega: f64, record: &CalibrationRecord) -> Result<f64> {
    record.modulation_depth(p_omega)
}
