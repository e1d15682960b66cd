//! Closed-form probe susceptibility of the continuum-dressed Λ medium.
//!
//! With the probe detuning x′ = E_b + ω₁ − E_a, the continuum integral has
//! the closed form R_ij = B_i B_j F(x′), where
//!
//! ```text
//! F(x′) = π [γ x′ (q² − 1) − 2qγ² − i (x′ + qγ)²] / (x′² + γ²)
//! ```
//!
//! and the susceptibility is
//!
//! ```text
//! χ = −2πN [R_bb + (ε₂²/4) R_bc R_cb / D],   D = Δ + iγ_cb − (ε₂²/4) R_cc
//!   = −2πN R_bb (Δ + iγ_cb) / D
//! ```
//!
//! The second line uses R_bc R_cb = R_bb R_cc and is what [`chi`] evaluates;
//! it makes the dark-state zero at Δ = 0 exact in floating point.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::params::{AtomicSystem, ContinuumShape, FieldConfig, Level, Probe, ProbeGrid};


/// Dimensionless Fano factor (u + qγ)² / (u² + γ²) at u = E − E_a.
pub fn profile_factor(sys: &AtomicSystem, u: f64) -> f64 {
    match sys.continuum {
        ContinuumShape::Flat => 1.0,
        ContinuumShape::Fano => {
            let num = u + sys.q * sys.gamma;
            num * num / (u * u + sys.gamma * sys.gamma)
        }
    }
}

/// Squared bound–continuum dipole |d_iE|² at absolute energy `e`.
pub fn fano_profile(e: f64, sys: &AtomicSystem, which: Level) -> f64 {
    let b = sys.coupling(which);
    b * b * profile_factor(sys, e - sys.e_a)
}

/// F(x′), the closed-form continuum integral per unit B_i B_j.
pub fn fano_bracket(sys: &AtomicSystem, x: f64) -> Complex64 {
    match sys.continuum {
        ContinuumShape::Flat => Complex64::new(0.0, -PI),
        ContinuumShape::Fano => {
            let (g, q) = (sys.gamma, sys.q);
            let shifted = x + q * g;
            let num = Complex64::new(g * x * (q * q - 1.0) - 2.0 * q * g * g, -shifted * shifted);
            num * (PI / (x * x + g * g))
        }
    }
}

/// dF/dx′.
pub fn fano_bracket_derivative(sys: &AtomicSystem, x: f64) -> Complex64 {
    match sys.continuum {
        ContinuumShape::Flat => Complex64::new(0.0, 0.0),
        ContinuumShape::Fano => {
            let (g, q) = (sys.gamma, sys.q);
            let shifted = x + q * g;
            let num = Complex64::new(g * x * (q * q - 1.0) - 2.0 * q * g * g, -shifted * shifted);
            let dnum = Complex64::new(g * (q * q - 1.0), -2.0 * shifted);
            let den = x * x + g * g;
            (dnum * den - num * (2.0 * x)) * (PI / (den * den))
        }
    }
}

pub fn r_closed(probe: Probe, sys: &AtomicSystem, i: Level, j: Level) -> Complex64 {
    fano_bracket(sys, probe.detuning) * (sys.coupling(i) * sys.coupling(j))
}

/// −N/(2ε₀) in atomic units.
pub fn prefactor(sys: &AtomicSystem) -> f64 {
    -2.0 * PI * sys.density_n
}

struct Pieces {
    bracket: Complex64,
    /// Δ + iγ_cb
    offset: Complex64,
    denominator: Complex64,
    dressing: f64,
}

fn pieces(probe: Probe, sys: &AtomicSystem, field: &FieldConfig) -> Pieces {
    let bracket = fano_bracket(sys, probe.detuning);
    let offset = Complex64::new(field.two_photon_detuning(sys, probe), sys.gamma_cb);
    let dressing = 0.25 * field.eps2 * field.eps2 * sys.b_c * sys.b_c;
    Pieces {
        bracket,
        offset,
        denominator: offset - bracket * dressing,
        dressing,
    }
}

pub fn chi(probe: Probe, sys: &AtomicSystem, field: &FieldConfig) -> Result<Complex64> {
    let scale = prefactor(sys) * sys.b_b * sys.b_b;
    if field.eps2 == 0.0 {
        return Ok(fano_bracket(sys, probe.detuning) * scale);
    }
    let p = pieces(probe, sys, field);
    if p.denominator == Complex64::new(0.0, 0.0) {
        return Err(Error::Degenerate {
            detuning: probe.detuning,
        });
    }
    Ok(p.bracket * p.offset / p.denominator * scale)
}

/// Term-by-term evaluation from the four R_ij, without the factorization.
pub fn chi_termwise(probe: Probe, sys: &AtomicSystem, field: &FieldConfig) -> Result<Complex64> {
    chi_from_couplings(
        probe,
        sys,
        field,
        [
            r_closed(probe, sys, Level::B, Level::B),
            r_closed(probe, sys, Level::B, Level::C),
            r_closed(probe, sys, Level::C, Level::B),
            r_closed(probe, sys, Level::C, Level::C),
        ],
    )
}

/// χ from externally supplied [R_bb, R_bc, R_cb, R_cc].
pub fn chi_from_couplings(
    probe: Probe,
    sys: &AtomicSystem,
    field: &FieldConfig,
    [r_bb, r_bc, r_cb, r_cc]: [Complex64; 4],
) -> Result<Complex64> {
    let k = 0.25 * field.eps2 * field.eps2;
    if k == 0.0 {
        return Ok(r_bb * prefactor(sys));
    }
    let d = Complex64::new(field.two_photon_detuning(sys, probe), sys.gamma_cb) - r_cc * k;
    if d == Complex64::new(0.0, 0.0) {
        return Err(Error::Degenerate {
            detuning: probe.detuning,
        });
    }
    Ok((r_bb + r_bc * r_cb * k / d) * prefactor(sys))
}

/// dχ/dω₁ from the closed form.
pub fn chi_derivative(probe: Probe, sys: &AtomicSystem, field: &FieldConfig) -> Result<Complex64> {
    let scale = prefactor(sys) * sys.b_b * sys.b_b;
    let df = fano_bracket_derivative(sys, probe.detuning);
    if field.eps2 == 0.0 {
        return Ok(df * scale);
    }
    let p = pieces(probe, sys, field);
    let d = p.denominator;
    if d == Complex64::new(0.0, 0.0) {
        return Err(Error::Degenerate {
            detuning: probe.detuning,
        });
    }
    let dd = Complex64::new(1.0, 0.0) - df * p.dressing;
    let num = (df * p.offset + p.bracket) * d - p.bracket * p.offset * dd;
    Ok(num / (d * d) * scale)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DerivativeMode {
    Analytic,
    /// Central differences with one Richardson step; the step is
    /// `relative_step` times the local feature scale min(γ, |D|).
    FiniteDifference { relative_step: f64 },
}

impl DerivativeMode {
    pub const DEFAULT_FD: DerivativeMode = DerivativeMode::FiniteDifference { relative_step: 1e-3 };
}

/// Smallest frequency scale on which χ varies near `probe`.
pub fn feature_scale(probe: Probe, sys: &AtomicSystem, field: &FieldConfig) -> f64 {
    if field.eps2 == 0.0 {
        return sys.gamma;
    }
    sys.gamma.min(pieces(probe, sys, field).denominator.norm())
}

fn re_chi_slope_fd(probe: Probe, sys: &AtomicSystem, field: &FieldConfig, rel: f64) -> Result<f64> {
    let h = rel * feature_scale(probe, sys, field);
    let x = probe.detuning;
    let representable = |step: f64| {
        let stepped = (x + step) - x;
        step.is_finite() && step > 0.0 && ((stepped - step) / step).abs() < 1e-6
    };
    if !representable(h) || !representable(0.5 * h) {
        return Err(Error::StepUnderflow { step: h, detuning: x });
    }
    let central = |step: f64| -> Result<f64> {
        let up = chi(probe.shifted(step), sys, field)?.re;
        let down = chi(probe.shifted(-step), sys, field)?.re;
        Ok((up - down) / (2.0 * step))
    };
    let coarse = central(h)?;
    let fine = central(0.5 * h)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// dRe χ/dω₁.
pub fn dispersion_slope(
    probe: Probe,
    sys: &AtomicSystem,
    field: &FieldConfig,
    mode: DerivativeMode,
) -> Result<f64> {
    match mode {
        DerivativeMode::Analytic => Ok(chi_derivative(probe, sys, field)?.re),
        DerivativeMode::FiniteDifference { relative_step } => {
            re_chi_slope_fd(probe, sys, field, relative_step)
        }
    }
}

/// n_g = 1 + (ω₁/2) dRe χ/dω₁.
pub fn group_index(
    probe: Probe,
    sys: &AtomicSystem,
    field: &FieldConfig,
    mode: DerivativeMode,
) -> Result<f64> {
    Ok(1.0 + 0.5 * probe.omega1 * dispersion_slope(probe, sys, field, mode)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    SteadyState,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::Quadrature => "quadrature",
            Method::SteadyState => "steady_state",
        }
    }
}

/// χ sampled on a probe grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SusceptibilitySpectrum {
    pub grid: ProbeGrid,
    pub chi: Vec<Complex64>,
    pub method: Method,
    pub params_fingerprint: String,
}

impl SusceptibilitySpectrum {
    pub fn closed_form(sys: &AtomicSystem, field: &FieldConfig) -> Result<Self> {
        sys.validate()?;
        field.validate()?;
        let probes: Vec<Probe> = field.probe_grid.probes(sys).collect();
        let chi = probes
            .par_iter()
            .map(|&p| chi(p, sys, field))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_parts(sys, field, chi, Method::ClosedForm))
    }

    pub(crate) fn from_parts(
        sys: &AtomicSystem,
        field: &FieldConfig,
        chi: Vec<Complex64>,
        method: Method,
    ) -> Self {
        SusceptibilitySpectrum {
            grid: field.probe_grid.clone(),
            chi,
            method,
            params_fingerprint: crate::io::fingerprint(sys, field),
        }
    }

    pub fn len(&self) -> usize {
        self.chi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chi.is_empty()
    }

    pub fn peak_abs_re(&self) -> f64 {
        self.chi.iter().map(|c| c.re.abs()).fold(0.0, f64::max)
    }

    pub fn peak_im(&self) -> f64 {
        self.chi.iter().map(|c| c.im).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn peak_abs_im(&self) -> f64 {
        self.chi.iter().map(|c| c.im.abs()).fold(0.0, f64::max)
    }
}

/// Peak of Im χ without the control field, reached at x′ = γ/q.
pub fn undressed_peak(sys: &AtomicSystem) -> f64 {
    let factor = match sys.continuum {
        ContinuumShape::Flat => 1.0,
        ContinuumShape::Fano => 1.0 + sys.q * sys.q,
    };
    -prefactor(sys) * PI * sys.b_b * sys.b_b * factor
}
