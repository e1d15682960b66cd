//! Side-by-side evaluation of the closed form and both oracles on a fixed
//! sample of probe detunings.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::pv::{chi_quadrature, LowerLimit, QuadratureSettings};
use super::steady::{chi_steady_many, SteadySettings};
use crate::analysis::find_window;
use crate::error::Result;
use crate::params::{AtomicSystem, FieldConfig, Probe};
use crate::susceptibility::{chi, undressed_peak, SusceptibilitySpectrum};

/// Quadrature must match the closed form to this relative deviation.
pub const QUADRATURE_TOL: f64 = 1e-6;
/// Steady-state deviation allowed, as a fraction of the undressed peak.
pub const STEADY_TOL: f64 = 0.02;
/// Relative deviations are taken against max(|χ|, this × undressed peak);
/// at an exact zero that compares at the 1e-15 × peak level.
pub const RELATIVE_FLOOR: f64 = 1e-9;

/// 11 points across the window (±γ without a control field) plus
/// ±{1..5}γ wings, sorted by detuning.
pub fn sample_probes(sys: &AtomicSystem, field: &FieldConfig) -> Vec<Probe> {
    let center = field.dark_probe(sys);
    let halfwidth = if field.eps2 > 0.0 {
        SusceptibilitySpectrum::closed_form(sys, field)
            .and_then(|s| find_window(&s, sys, field, 0.5))
            .map(|w| w.width)
            .unwrap_or(sys.gamma)
    } else {
        sys.gamma
    };
    let mut probes: Vec<Probe> = (-5..=5)
        .map(|k| center.shifted(halfwidth * k as f64 / 5.0))
        .collect();
    for k in 1..=5 {
        let d = k as f64 * sys.gamma;
        probes.push(center.shifted(-d));
        probes.push(center.shifted(d));
    }
    probes.sort_by(|a, b| a.detuning.total_cmp(&b.detuning));
    probes
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleSample {
    pub detuning_au: f64,
    pub omega1_au: f64,
    pub closed: Complex64,
    pub quadrature_whole_line: Complex64,
    pub quadrature_threshold: Complex64,
    pub steady_state: Complex64,
    pub rel_dev_whole_line: f64,
    pub rel_dev_threshold: f64,
    pub steady_dev_over_peak: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub undressed_peak_im_chi: f64,
    pub max_rel_dev_whole_line: f64,
    pub max_rel_dev_threshold: f64,
    pub max_steady_dev_over_peak: f64,
    pub samples: Vec<OracleSample>,
}

impl EquivalenceReport {
    pub fn passes(&self, quadrature_tol: f64, steady_tol: f64) -> bool {
        self.max_rel_dev_whole_line < quadrature_tol
            && self.max_rel_dev_threshold < quadrature_tol
            && self.max_steady_dev_over_peak < steady_tol
    }
}

/// Closed form against whole-line quadrature, quadrature from a threshold
/// at zero energy, and the η-extrapolated discretized continuum.
pub fn equivalence_report(sys: &AtomicSystem, field: &FieldConfig, probes: &[Probe]) -> Result<EquivalenceReport> {
    let whole = QuadratureSettings::default();
    let threshold = QuadratureSettings {
        lower_limit: LowerLimit::Threshold(0.0),
        ..Default::default()
    };
    let peak = undressed_peak(sys);
    let floor = RELATIVE_FLOOR * peak;
    let steady = chi_steady_many(sys, field, probes, &SteadySettings::default())?;
    let samples = probes
        .par_iter()
        .zip(steady.par_iter())
        .map(|(&p, &st)| {
            let c = chi(p, sys, field)?;
            let qw = chi_quadrature(p, sys, field, &whole)?;
            let qt = chi_quadrature(p, sys, field, &threshold)?;
            let scale = c.norm().max(floor);
            Ok(OracleSample {
                detuning_au: p.detuning,
                omega1_au: p.omega1,
                closed: c,
                quadrature_whole_line: qw,
                quadrature_threshold: qt,
                steady_state: st,
                rel_dev_whole_line: (qw - c).norm() / scale,
                rel_dev_threshold: (qt - c).norm() / scale,
                steady_dev_over_peak: (st - c).norm() / peak,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max = |f: fn(&OracleSample) -> f64| samples.iter().map(f).fold(0.0, f64::max);
    Ok(EquivalenceReport {
        undressed_peak_im_chi: peak,
        max_rel_dev_whole_line: max(|s| s.rel_dev_whole_line),
        max_rel_dev_threshold: max(|s| s.rel_dev_threshold),
        max_steady_dev_over_peak: max(|s| s.steady_dev_over_peak),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Preset;

    #[test]
    fn sample_layout() {
        let (sys, field) = Preset::Fig3.build();
        let probes = sample_probes(&sys, &field);
        assert_eq!(probes.len(), 21);
        assert!(probes.windows(2).all(|w| w[0].detuning <= w[1].detuning));
        assert_eq!(probes[0].detuning, -5.0 * sys.gamma);
        assert_eq!(probes[10].detuning, 0.0);
    }

    #[test]
    fn undressed_sample_spans_gamma() {
        let (sys, field) = Preset::Fig1.build();
        let probes = sample_probes(&sys, &field);
        let inner: Vec<f64> = probes.iter().map(|p| p.detuning / sys.gamma).filter(|x| x.abs() < 0.99).collect();
        assert_eq!(inner.len(), 9);
    }

    #[test]
    fn broken_tolerance_fails() {
        let (sys, field) = Preset::Fig2.build();
        let r = equivalence_report(&sys, &field, &sample_probes(&sys, &field)).unwrap();
        assert!(r.passes(QUADRATURE_TOL, STEADY_TOL));
        assert!(!r.passes(0.0, STEADY_TOL));
        assert!(!r.passes(QUADRATURE_TOL, 0.0));
    }
}
