//! Observables extracted from susceptibility spectra: transparency-window
//! geometry, group index at the window center, and width scaling laws.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::params::{AtomicSystem, ContinuumShape, FieldConfig, Level, Probe};
use crate::susceptibility::{chi, dispersion_slope, group_index, DerivativeMode, SusceptibilitySpectrum};

/// Minimum number of grid points that must fall inside a window.
pub const MIN_INTERIOR_POINTS: usize = 20;
/// Fits ignore windows wider than this many γ.
pub const MAX_FIT_WIDTH_GAMMAS: f64 = 10.0;
pub const MIN_SWEEP_POINTS: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    #[serde(rename = "center_au")]
    pub center: f64,
    pub center_detuning_au: f64,
    #[serde(rename = "width_au")]
    pub width: f64,
    pub width_over_gamma: f64,
    pub threshold_used: f64,
    pub n_g_center: f64,
    pub dispersion_slope: f64,
    /// Probe frequency of the Fano zero; absent for a flat continuum.
    #[serde(rename = "fano_zero_au")]
    pub fano_zero: Option<f64>,
}

fn undressed(field: &FieldConfig) -> FieldConfig {
    FieldConfig {
        eps2: 0.0,
        ..field.clone()
    }
}

/// Distance from `center` along `direction` to the first point where
/// Im χ rises to `fraction` of the undressed absorption.
fn edge_distance(
    sys: &AtomicSystem,
    field: &FieldConfig,
    reference: &FieldConfig,
    center: Probe,
    direction: f64,
    fraction: f64,
    initial: f64,
) -> Result<f64> {
    let excess = |d: f64| -> Result<f64> {
        let p = center.shifted(direction * d);
        Ok(chi(p, sys, field)?.im - fraction * chi(p, sys, reference)?.im)
    };
    let limit = 1e8 * sys.gamma;
    let (mut lo, mut hi) = (0.0, initial);
    while excess(hi)? < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > limit {
            return Err(Error::NoWindow {
                detuning: center.detuning,
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Locates the transparency window around two-photon resonance.
///
/// The window is the contiguous interval around Δ = 0 where
/// Im χ ≤ `threshold_fraction` · Im χ(ε₂ = 0). Its edges are bracketed outward
/// from the center and bisected on the closed form; `spec` supplies the grid
/// that must resolve the result.
pub fn find_window(
    spec: &SusceptibilitySpectrum,
    sys: &AtomicSystem,
    field: &FieldConfig,
    threshold_fraction: f64,
) -> Result<WindowReport> {
    if !(threshold_fraction > 0.0 && threshold_fraction < 1.0) {
        return Err(Error::invalid("threshold_fraction", "must lie in (0, 1)"));
    }
    if !(field.eps2 > 0.0) {
        return Err(Error::invalid("eps2", "a transparency window needs a control field"));
    }
    if spec.grid != field.probe_grid {
        return Err(Error::invalid("spectrum", "computed on a different probe grid"));
    }
    let reference = undressed(field);
    let center = field.dark_probe(sys);
    let at_center = chi(center, sys, field)?.im - threshold_fraction * chi(center, sys, &reference)?.im;
    if at_center >= 0.0 {
        return Err(Error::NoWindow {
            detuning: center.detuning,
        });
    }
    let dressing = 0.25 * field.eps2 * field.eps2;
    let scale = crate::susceptibility::r_closed(center, sys, Level::C, Level::C).norm() * dressing;
    let initial = (1e-3 * scale.min(sys.gamma)).max(1e-6 * f64::EPSILON * sys.gamma);
    let right = edge_distance(sys, field, &reference, center, 1.0, threshold_fraction, initial)?;
    let left = edge_distance(sys, field, &reference, center, -1.0, threshold_fraction, initial)?;
    let width = left + right;

    let (lo, hi) = (center.detuning - left, center.detuning + right);
    let interior = spec
        .grid
        .probes(sys)
        .filter(|p| p.detuning > lo && p.detuning < hi)
        .count();
    if interior < MIN_INTERIOR_POINTS {
        return Err(Error::UnresolvedWindow {
            interior_points: interior,
            width,
            needed_halfwidth: 2.0 * width,
            needed_spacing: width / (2.0 * MIN_INTERIOR_POINTS as f64),
        });
    }

    let fano_zero = match sys.continuum {
        ContinuumShape::Fano => Some(sys.fano_zero_frequency()),
        ContinuumShape::Flat => None,
    };
    Ok(WindowReport {
        center: center.omega1,
        center_detuning_au: center.detuning,
        width,
        width_over_gamma: width / sys.gamma,
        threshold_used: threshold_fraction,
        n_g_center: group_index(center, sys, field, DerivativeMode::Analytic)?,
        dispersion_slope: dispersion_slope(center, sys, field, DerivativeMode::Analytic)?,
        fano_zero,
    })
}

/// Group index at the window center predicted by expanding χ to first order
/// in Δ: 1 + (ω₁/2)·2πN·4B_b²/(ε₂²B_c²).
pub fn small_detuning_group_index(sys: &AtomicSystem, field: &FieldConfig) -> f64 {
    let omega1 = field.dark_probe(sys).omega1;
    let slope = 2.0 * PI * sys.density_n * 4.0 * sys.b_b * sys.b_b / (field.eps2 * field.eps2 * sys.b_c * sys.b_c);
    1.0 + 0.5 * omega1 * slope
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepVariable {
    Eps2,
    Q,
}

impl SweepVariable {
    pub fn apply(self, sys: &AtomicSystem, field: &FieldConfig, value: f64) -> (AtomicSystem, FieldConfig) {
        let (mut s, mut f) = (sys.clone(), field.clone());
        match self {
            SweepVariable::Eps2 => f.eps2 = value,
            SweepVariable::Q => s.q = value,
        }
        (s, f)
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::Eps2 => "eps2",
            SweepVariable::Q => "q",
        }
    }
}

impl std::str::FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eps2" => Ok(SweepVariable::Eps2),
            "q" => Ok(SweepVariable::Q),
            _ => Err(Error::invalid("sweep_var", format!("expected eps2 or q, got `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub swept_variable: SweepVariable,
    pub points_used: usize,
}

#[derive(Debug)]
pub struct SweepPoint {
    pub value: f64,
    pub report: Result<WindowReport>,
}

fn window_at(sys: &AtomicSystem, field: &FieldConfig) -> Result<WindowReport> {
    sys.validate()?;
    field.validate()?;
    let spec = SusceptibilitySpectrum::closed_form(sys, field)?;
    find_window(&spec, sys, field, 0.5)
}

/// Window reports for every sweep value, in input order.
pub fn sweep_windows(
    sys: &AtomicSystem,
    base_field: &FieldConfig,
    variable: SweepVariable,
    values: &[f64],
) -> Vec<SweepPoint> {
    values
        .par_iter()
        .map(|&value| {
            let (s, f) = variable.apply(sys, base_field, value);
            SweepPoint {
                value,
                report: window_at(&s, &f),
            }
        })
        .collect()
}

/// Log–log least squares of width against the swept value.
pub fn fit_scaling(
    variable: SweepVariable,
    points: &[(f64, f64)],
    gamma: f64,
) -> Result<ScalingFit> {
    let used: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, w)| *w <= MAX_FIT_WIDTH_GAMMAS * gamma)
        .map(|(v, w)| (v.ln(), w.ln()))
        .collect();
    if used.len() < MIN_SWEEP_POINTS {
        return Err(Error::invalid(
            "sweep_values",
            format!("{} usable points, need at least {MIN_SWEEP_POINTS}", used.len()),
        ));
    }
    let n = used.len() as f64;
    let mx = used.iter().map(|p| p.0).sum::<f64>() / n;
    let my = used.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = used.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = used.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = used.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("sweep_values", "all sweep values are equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = used.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { (1.0 - ss_res / syy).clamp(0.0, 1.0) };
    Ok(ScalingFit {
        exponent: slope,
        prefactor: intercept.exp(),
        r_squared,
        swept_variable: variable,
        points_used: used.len(),
    })
}

/// Fits width ∝ value^exponent; any unresolved window aborts the sweep.
pub fn width_scaling_sweep(
    sys: &AtomicSystem,
    base_field: &FieldConfig,
    variable: SweepVariable,
    values: &[f64],
) -> Result<ScalingFit> {
    if values.len() < MIN_SWEEP_POINTS {
        return Err(Error::invalid(
            "sweep_values",
            format!("need at least {MIN_SWEEP_POINTS} values, got {}", values.len()),
        ));
    }
    let mut widths = Vec::with_capacity(values.len());
    for point in sweep_windows(sys, base_field, variable, values) {
        match point.report {
            Ok(r) => widths.push((point.value, r.width)),
            Err(e) => {
                return Err(Error::SweepPoint {
                    value: point.value,
                    source: Box::new(e),
                })
            }
        }
    }
    fit_scaling(variable, &widths, sys.gamma)
}

/// Window width ε₂²/Γ of an ordinary Λ system with upper-level coherence
/// relaxation Γ.
pub fn discrete_limit_width(gamma_upper: f64, eps2: f64) -> Result<f64> {
    if !(gamma_upper > 0.0) {
        return Err(Error::invalid("gamma_upper", "must be > 0"));
    }
    Ok(eps2 * eps2 / gamma_upper)
}

/// q at which ε₂²q² equals ε₂²/Γ.
pub fn comparable_asymmetry(gamma_upper: f64) -> Result<f64> {
    if !(gamma_upper > 0.0) {
        return Err(Error::invalid("gamma_upper", "must be > 0"));
    }
    Ok(gamma_upper.sqrt().recip())
}

/// Width 2πε₂²B_j²/4 induced on a lower state by a flat continuum.
pub fn flat_continuum_width(sys: &AtomicSystem, eps2: f64, which: Level) -> f64 {
    let b = sys.coupling(which);
    2.0 * PI * eps2 * eps2 * b * b / 4.0
}
