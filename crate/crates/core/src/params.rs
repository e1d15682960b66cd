//! Parameter records for the atomic medium and the applied fields.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::UnitContext;

/// One of the two lower bound states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    /// Initial state, coupled to the continuum by the probe.
    B,
    /// Second lower state, coupled to the continuum by the control field.
    C,
}

/// Energy dependence of the bound–continuum dipole coupling.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContinuumShape {
    /// Continuum structured by an autoionizing state.
    #[default]
    Fano,
    /// Structureless continuum, |d|² = B² at every energy.
    Flat,
}

/// The atomic medium, all quantities in atomic units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomicSystem {
    pub e_b: f64,
    pub e_c: f64,
    /// Position of the autoionizing resonance.
    pub e_a: f64,
    /// Autoionizing half-width.
    pub gamma: f64,
    /// Fano asymmetry parameter.
    pub q: f64,
    pub b_b: f64,
    pub b_c: f64,
    /// Relaxation rate of the b–c coherence.
    pub gamma_cb: f64,
    /// Atoms per cubic Bohr.
    pub density_n: f64,
    #[serde(default)]
    pub continuum: ContinuumShape,
}

fn finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite, got {v}")))
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    finite(name, v)?;
    if v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be > 0, got {v}")))
    }
}

impl AtomicSystem {
    pub fn validate(&self) -> Result<()> {
        positive("gamma", self.gamma)?;
        positive("b_b", self.b_b)?;
        positive("b_c", self.b_c)?;
        positive("density_n", self.density_n)?;
        finite("gamma_cb", self.gamma_cb)?;
        if self.gamma_cb < 0.0 {
            return Err(Error::invalid("gamma_cb", "must be >= 0"));
        }
        finite("q", self.q)?;
        finite("e_b", self.e_b)?;
        finite("e_c", self.e_c)?;
        if self.e_b >= 0.0 {
            return Err(Error::invalid("e_b", "bound state must lie below threshold (< 0)"));
        }
        if self.e_c >= 0.0 {
            return Err(Error::invalid("e_c", "bound state must lie below threshold (< 0)"));
        }
        positive("e_a", self.e_a)?;
        Ok(())
    }

    pub fn coupling(&self, level: Level) -> f64 {
        match level {
            Level::B => self.b_b,
            Level::C => self.b_c,
        }
    }

    /// Probe frequency resonant with the autoionizing state, E_a − E_b.
    pub fn resonance_frequency(&self) -> f64 {
        self.e_a - self.e_b
    }

    /// Control frequency that puts the two-photon resonance on E_a.
    pub fn aligned_control_frequency(&self) -> f64 {
        self.e_a - self.e_c
    }

    /// Probe frequency of the Fano zero, where the probe coupling vanishes.
    pub fn fano_zero_frequency(&self) -> f64 {
        self.resonance_frequency() - self.q * self.gamma
    }
}

/// A probe frequency together with its detuning x′ = E_b + ω₁ − E_a.
///
/// Windows can be five decades narrower than γ, far below the resolution of
/// ω₁ ≈ 0.3 a.u. in double precision, so the detuning is carried separately
/// and all line-shape arithmetic uses it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Probe {
    pub omega1: f64,
    pub detuning: f64,
}

impl Probe {
    pub fn from_omega1(sys: &AtomicSystem, omega1: f64) -> Self {
        Probe {
            omega1,
            detuning: (sys.e_b - sys.e_a) + omega1,
        }
    }

    pub fn from_detuning(sys: &AtomicSystem, detuning: f64) -> Self {
        Probe {
            omega1: sys.resonance_frequency() + detuning,
            detuning,
        }
    }

    pub fn shifted(&self, by: f64) -> Self {
        Probe {
            omega1: self.omega1 + by,
            detuning: self.detuning + by,
        }
    }
}

/// Probe frequencies as offsets from a center frequency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeGrid {
    pub center: f64,
    pub offsets: Vec<f64>,
}

impl ProbeGrid {
    pub fn uniform(center: f64, halfwidth: f64, points: usize) -> Result<Self> {
        positive("grid_halfwidth_au", halfwidth)?;
        if points < 2 {
            return Err(Error::invalid("grid_points", "need at least 2 points"));
        }
        let step = 2.0 * halfwidth / (points - 1) as f64;
        let offsets = (0..points)
            .map(|k| -halfwidth + step * k as f64)
            .collect();
        Ok(ProbeGrid { center, offsets })
    }

    /// The halfwidth this grid was built with, if it is a uniform grid.
    pub fn uniform_halfwidth(&self) -> Option<f64> {
        let halfwidth = -*self.offsets.first()?;
        let rebuilt = ProbeGrid::uniform(self.center, halfwidth, self.len()).ok()?;
        (rebuilt == *self).then_some(halfwidth)
    }

    /// Nested uniform spans ±s·γ (501-point halves each), merged and
    /// deduplicated, so that windows from ~γ down to ~10⁻⁴γ are all resolved.
    pub fn nested(center: f64, gamma: f64) -> Self {
        const SPANS: [f64; 4] = [50.0, 1.0, 1e-2, 1e-4];
        const HALF: i32 = 500;
        let mut units: Vec<f64> = SPANS
            .iter()
            .flat_map(|&s| (-HALF..=HALF).map(move |j| s * j as f64 / HALF as f64))
            .collect();
        units.sort_by(f64::total_cmp);
        units.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * a.abs().max(b.abs()));
        ProbeGrid {
            center,
            offsets: units.into_iter().map(|u| u * gamma).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        finite("grid_center_au", self.center)?;
        if self.offsets.is_empty() {
            return Err(Error::invalid("probe_grid", "must be nonempty"));
        }
        if self.offsets.iter().any(|o| !o.is_finite()) {
            return Err(Error::invalid("probe_grid", "contains non-finite values"));
        }
        if self.offsets.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("probe_grid", "must be strictly increasing"));
        }
        Ok(())
    }

    pub fn omega1(&self, k: usize) -> f64 {
        self.center + self.offsets[k]
    }

    pub fn probes<'a>(&'a self, sys: &'a AtomicSystem) -> impl Iterator<Item = Probe> + 'a {
        let base = (sys.e_b - sys.e_a) + self.center;
        self.offsets.iter().map(move |&o| Probe {
            omega1: self.center + o,
            detuning: base + o,
        })
    }

    /// Detuning range x′ covered by the grid.
    pub fn detuning_range(&self, sys: &AtomicSystem) -> (f64, f64) {
        let base = (sys.e_b - sys.e_a) + self.center;
        (base + self.offsets[0], base + self.offsets[self.offsets.len() - 1])
    }
}

/// Control field and probe frequencies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldConfig {
    pub eps2: f64,
    pub omega2: f64,
    pub probe_grid: ProbeGrid,
}

impl FieldConfig {
    pub fn validate(&self) -> Result<()> {
        finite("eps2", self.eps2)?;
        if self.eps2 < 0.0 {
            return Err(Error::invalid("eps2", "must be >= 0"));
        }
        positive("omega2", self.omega2)?;
        self.probe_grid.validate()
    }

    /// Every probe must reach the continuum when integrating from the
    /// physical threshold.
    pub fn validate_above_threshold(&self, sys: &AtomicSystem) -> Result<()> {
        for p in self.probe_grid.probes(sys) {
            if sys.e_b + p.omega1 <= 0.0 {
                return Err(Error::invalid(
                    "probe_grid",
                    format!("probe at {:e} a.u. does not reach the continuum", p.omega1),
                ));
            }
        }
        Ok(())
    }

    /// ω₂ − (E_a − E_c): offset between the two-photon resonance and E_a.
    pub fn control_detuning(&self, sys: &AtomicSystem) -> f64 {
        self.omega2 - sys.aligned_control_frequency()
    }

    /// Two-photon detuning Δ = E_b + ω₁ − E_c − ω₂.
    pub fn two_photon_detuning(&self, sys: &AtomicSystem, probe: Probe) -> f64 {
        probe.detuning - self.control_detuning(sys)
    }

    /// The probe at exact two-photon resonance.
    pub fn dark_probe(&self, sys: &AtomicSystem) -> Probe {
        Probe::from_detuning(sys, self.control_detuning(sys))
    }
}

/// Parameter sets of the five reference spectra.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Fig1,
        Preset::Fig2,
        Preset::Fig3,
        Preset::Fig4,
        Preset::Fig5,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig1 => "fig1",
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
        }
    }

    /// (q, ε₂) for this preset.
    pub fn shape(self) -> (f64, f64) {
        match self {
            Preset::Fig1 => (10.0, 0.0),
            Preset::Fig2 => (10.0, 1e-6),
            Preset::Fig3 => (10.0, 1e-7),
            Preset::Fig4 => (10.0, 1e-8),
            Preset::Fig5 => (100.0, 1e-9),
        }
    }

    pub fn build(self) -> (AtomicSystem, FieldConfig) {
        let (q, eps2) = self.shape();
        let density_n = UnitContext::CODATA2018
            .convert_density(0.67e12)
            .expect("preset density is valid");
        let sys = AtomicSystem {
            e_b: -0.2,
            e_c: -0.1,
            e_a: 0.1,
            gamma: 1e-9,
            q,
            b_b: 2.0,
            b_c: 3.0,
            gamma_cb: 0.0,
            density_n,
            continuum: ContinuumShape::Fano,
        };
        let field = FieldConfig {
            eps2,
            omega2: sys.aligned_control_frequency(),
            probe_grid: ProbeGrid::nested(sys.resonance_frequency(), sys.gamma),
        };
        (sys, field)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::invalid("preset", format!("unknown preset `{s}` (expected fig1..fig5)")))
    }
}
