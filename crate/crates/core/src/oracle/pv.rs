use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::params::{AtomicSystem, ContinuumShape, FieldConfig, Level, Probe};
use crate::quadrature::{integrate, integrate_tail, Tolerance};
use crate::susceptibility::{chi_from_couplings, profile_factor, Method, SusceptibilitySpectrum};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LowerLimit {
    /// Integrate over the whole real line; comparable with the closed form.
    NegativeInfinity,
    /// Physical threshold at this absolute energy. The pure Fano profile
    /// tends to a constant, so the integral is log-divergent at +∞; the band
    /// is closed at the mirror image of the threshold about E_a.
    Threshold(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub pole_exclusion_halfwidth: f64,
    pub lower_limit: LowerLimit,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        QuadratureSettings {
            abs_tol: 1e-14,
            rel_tol: 1e-11,
            pole_exclusion_halfwidth: 1e-6,
            lower_limit: LowerLimit::NegativeInfinity,
            max_subdivisions: 4000,
        }
    }
}

impl QuadratureSettings {
    pub fn physical_threshold() -> Self {
        QuadratureSettings {
            lower_limit: LowerLimit::Threshold(0.0),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("abs_tol", self.abs_tol), ("rel_tol", self.rel_tol)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::invalid(name, format!("must lie in (0, 1), got {v}")));
            }
        }
        if !(self.pole_exclusion_halfwidth > 0.0) {
            return Err(Error::invalid("pole_exclusion_halfwidth", "must be > 0"));
        }
        Ok(())
    }

    fn tolerance(&self) -> Tolerance {
        Tolerance {
            abs: self.abs_tol,
            rel: self.rel_tol,
            max_subdivisions: self.max_subdivisions,
        }
    }
}

fn feature_points(sys: &AtomicSystem, x: f64) -> Vec<f64> {
    let mut pts = vec![0.0, x];
    if sys.continuum == ContinuumShape::Fano {
        pts.push(-sys.q * sys.gamma);
    }
    pts
}

/// Breakpoints clustered geometrically around each feature, clipped to (lo, hi).
fn breakpoints(sys: &AtomicSystem, x: f64, lo: f64, hi: f64) -> Vec<f64> {
    let mut b = vec![lo, hi];
    for c in feature_points(sys, x) {
        b.push(c);
        for k in -2..=8 {
            let d = sys.gamma * 10f64.powi(k);
            b.push(c - d);
            b.push(c + d);
        }
    }
    b.retain(|v| *v >= lo && *v <= hi);
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// ∫₀^m [p(x−t) − p(x+t)]/t dt, the principal value over [x − m, x + m]
/// folded about the pole; regular at t = 0. `m = ∞` adds a mapped tail.
fn folded(sys: &AtomicSystem, x: f64, m: f64, tol: Tolerance) -> Result<f64> {
    let p = |u: f64| profile_factor(sys, u);
    let integrand = |t: f64| {
        if t == 0.0 {
            0.0
        } else {
            (p(x - t) - p(x + t)) / t
        }
    };
    let mut breaks: Vec<f64> = feature_points(sys, x)
        .into_iter()
        .map(|c| (c - x).abs())
        .collect();
    breaks.extend((-2..=6).map(|k| sys.gamma * 10f64.powi(k)));
    breaks.push(0.0);
    if m.is_finite() {
        breaks.push(m);
    }
    breaks.retain(|v| *v >= 0.0 && *v <= m);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    if m.is_finite() {
        return Ok(integrate(integrand, &breaks, tol)?.value);
    }
    let tail_start = 10.0 * breaks.last().copied().unwrap_or(sys.gamma);
    breaks.push(tail_start);
    let body = integrate(integrand, &breaks, tol)?;
    let tail = integrate_tail(integrand, tail_start, tol)?;
    Ok(body.value + tail.value)
}

/// Principal value ∫ p(u)/(x − u) du of the dimensionless profile.
fn principal_value(sys: &AtomicSystem, x: f64, settings: &QuadratureSettings) -> Result<f64> {
    let tol = settings.tolerance();
    match settings.lower_limit {
        // decays as 1/t² at infinity
        LowerLimit::NegativeInfinity => folded(sys, x, f64::INFINITY, tol),
        LowerLimit::Threshold(threshold) => {
            let lo = threshold - sys.e_a;
            let hi = -lo;
            if x - lo <= settings.pole_exclusion_halfwidth {
                return Err(Error::ThresholdRegime {
                    pole: x + sys.e_a,
                    lower: threshold,
                    halfwidth: settings.pole_exclusion_halfwidth,
                });
            }
            if x >= hi {
                return Err(Error::invalid(
                    "lower_limit",
                    "pole lies above the mirrored band edge; threshold too close to E_a",
                ));
            }
            // symmetric part folded about the pole, the rest is regular
            let m = (x - lo).min(hi - x);
            let sym = folded(sys, x, m, tol)?;
            let (a, b) = if x - lo > m { (lo, x - m) } else { (x + m, hi) };
            let rest = if b > a {
                let f = |u: f64| profile_factor(sys, u) / (x - u);
                integrate(f, &breakpoints(sys, x, a, b), tol)?.value
            } else {
                0.0
            };
            Ok(sym + rest)
        }
    }
}

/// The continuum integral per unit B_i B_j at the probe detuning.
pub fn continuum_integral(
    probe: Probe,
    sys: &AtomicSystem,
    settings: &QuadratureSettings,
) -> Result<Complex64> {
    settings.validate()?;
    let x = probe.detuning;
    let re = principal_value(sys, x, settings)?;
    Ok(Complex64::new(re, -PI * profile_factor(sys, x)))
}

pub fn r_quadrature(
    probe: Probe,
    sys: &AtomicSystem,
    i: Level,
    j: Level,
    settings: &QuadratureSettings,
) -> Result<Complex64> {
    Ok(continuum_integral(probe, sys, settings)? * (sys.coupling(i) * sys.coupling(j)))
}

/// χ with every R_ij taken from quadrature.
pub fn chi_quadrature(
    probe: Probe,
    sys: &AtomicSystem,
    field: &FieldConfig,
    settings: &QuadratureSettings,
) -> Result<Complex64> {
    let unit = continuum_integral(probe, sys, settings)?;
    let (bb, cc) = (sys.b_b, sys.b_c);
    chi_from_couplings(
        probe,
        sys,
        field,
        [unit * (bb * bb), unit * (bb * cc), unit * (cc * bb), unit * (cc * cc)],
    )
}

impl SusceptibilitySpectrum {
    pub fn quadrature(
        sys: &AtomicSystem,
        field: &FieldConfig,
        settings: &QuadratureSettings,
    ) -> Result<Self> {
        sys.validate()?;
        field.validate()?;
        if matches!(settings.lower_limit, LowerLimit::Threshold(_)) {
            field.validate_above_threshold(sys)?;
        }
        let probes: Vec<Probe> = field.probe_grid.probes(sys).collect();
        let chi = probes
            .par_iter()
            .map(|&p| chi_quadrature(p, sys, field, settings))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_parts(sys, field, chi, Method::Quadrature))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Preset;
    use crate::susceptibility::{fano_bracket, r_closed};

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn whole_line_matches_closed_form() {
        for preset in Preset::ALL {
            let (sys, _) = preset.build();
            for k in -10..=10 {
                let p = Probe::from_detuning(&sys, 0.5 * k as f64 * sys.gamma);
                let r = r_quadrature(p, &sys, Level::B, Level::C, &Default::default()).unwrap();
                let c = r_closed(p, &sys, Level::B, Level::C);
                assert!(rel(r, c) < 1e-8, "{preset} k={k}: {r} vs {c}");
            }
        }
    }

    #[test]
    fn threshold_changes_little() {
        let s = QuadratureSettings::physical_threshold();
        for preset in Preset::ALL {
            let (sys, _) = preset.build();
            for k in -5..=5 {
                let p = Probe::from_detuning(&sys, k as f64 * sys.gamma);
                let a = continuum_integral(p, &sys, &s).unwrap();
                let b = continuum_integral(p, &sys, &Default::default()).unwrap();
                assert!(rel(a, b) < 1e-6, "{preset} k={k}");
            }
        }
    }

    #[test]
    fn flat_continuum_is_pure_delta_term() {
        let (mut sys, _) = Preset::Fig2.build();
        sys.continuum = ContinuumShape::Flat;
        let p = Probe::from_detuning(&sys, 2.0 * sys.gamma);
        let r = r_quadrature(p, &sys, Level::B, Level::C, &Default::default()).unwrap();
        assert_eq!(r.re, 0.0);
        assert_eq!(r.im, -PI * 6.0);
    }

    #[test]
    fn imaginary_part_is_minus_pi_profile() {
        let (sys, _) = Preset::Fig3.build();
        for k in -8..=8 {
            let x = k as f64 * 0.7 * sys.gamma;
            let p = Probe::from_detuning(&sys, x);
            let r = continuum_integral(p, &sys, &Default::default()).unwrap();
            let expected = fano_bracket(&sys, x).im;
            assert!((r.im - expected).abs() <= 1e-12 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn pole_at_threshold_rejected() {
        let (sys, _) = Preset::Fig2.build();
        let s = QuadratureSettings {
            lower_limit: LowerLimit::Threshold(0.1 - 1e-8),
            ..Default::default()
        };
        let p = Probe::from_detuning(&sys, 0.0);
        assert!(matches!(
            continuum_integral(p, &sys, &s),
            Err(Error::ThresholdRegime { .. })
        ));
    }

    #[test]
    fn bad_tolerance_rejected() {
        let (sys, _) = Preset::Fig2.build();
        let s = QuadratureSettings {
            rel_tol: 0.0,
            ..Default::default()
        };
        let p = Probe::from_detuning(&sys, 0.0);
        assert!(continuum_integral(p, &sys, &s).is_err());
    }

    #[test]
    fn starved_quadrature_reports_estimate() {
        let (sys, _) = Preset::Fig5.build();
        let s = QuadratureSettings {
            max_subdivisions: 4,
            rel_tol: 1e-14,
            ..QuadratureSettings::physical_threshold()
        };
        let p = Probe::from_detuning(&sys, 0.3 * sys.gamma);
        match continuum_integral(p, &sys, &s) {
            Err(Error::QuadratureNonConvergence { estimate, .. }) => assert!(estimate > 0.0),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
