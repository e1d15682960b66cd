//! Conversions between atomic units and laboratory units.
//!
//! Everything inside the crate is expressed in Hartree atomic units
//! (ħ = e = mₑ = 1, ε₀ = 1/4π). Conversions happen only when reading or
//! writing parameters and reports.

use crate::error::{Error, Result};

/// Speed of light in atomic units.
pub const SPEED_OF_LIGHT_AU: f64 = 137.035999;

/// Conversion constants (CODATA 2018).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitContext {
    pub hartree_to_ev: f64,
    /// Hartree energy divided by Planck's constant.
    pub hartree_to_hz: f64,
    pub bohr_to_cm: f64,
    pub au_time_to_s: f64,
}

impl UnitContext {
    pub const CODATA2018: UnitContext = UnitContext {
        hartree_to_ev: 27.211_386_245_988,
        hartree_to_hz: 6.579_683_920_502e15,
        bohr_to_cm: 0.529_177_210_903e-8,
        au_time_to_s: 2.418_884_326_585_7e-17,
    };
}

impl Default for UnitContext {
    fn default() -> Self {
        Self::CODATA2018
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyEquivalents {
    pub ev: f64,
    pub hz: f64,
}

impl UnitContext {
    /// Energy in Hartree to electron-volts and to frequency E/h.
    pub fn convert_energy(&self, value_au: f64) -> EnergyEquivalents {
        EnergyEquivalents {
            ev: value_au * self.hartree_to_ev,
            hz: value_au * self.hartree_to_hz,
        }
    }

    pub fn ev_to_au(&self, ev: f64) -> f64 {
        ev / self.hartree_to_ev
    }

    pub fn hz_to_au(&self, hz: f64) -> f64 {
        hz / self.hartree_to_hz
    }

    /// Number density in cm⁻³ to atoms per cubic Bohr.
    pub fn convert_density(&self, per_cm3: f64) -> Result<f64> {
        if !per_cm3.is_finite() || per_cm3 < 0.0 {
            return Err(Error::invalid(
                "density_cm3",
                format!("must be finite and non-negative, got {per_cm3}"),
            ));
        }
        Ok(per_cm3 * self.bohr_to_cm.powi(3))
    }

    pub fn density_to_cm3(&self, per_bohr3: f64) -> f64 {
        per_bohr3 / self.bohr_to_cm.powi(3)
    }

    pub fn cm_to_bohr(&self, cm: f64) -> f64 {
        cm / self.bohr_to_cm
    }

    pub fn ns_to_au_time(&self, ns: f64) -> f64 {
        ns * 1e-9 / self.au_time_to_s
    }

    pub fn au_time_to_ns(&self, t: f64) -> f64 {
        t * self.au_time_to_s * 1e9
    }
}
