//! Linear propagation of a weak probe pulse through a homogeneous slab of
//! the dressed medium, in the frequency domain.
//!
//! Each spectral component at ω is multiplied by exp[i ω χ(ω) L / 2c]
//! (refractive index n ≈ 1 + χ/2). The vacuum phase ωL/c is omitted, so
//! times are measured in the frame retarded by L/c and the reported delay is
//! the excess over vacuum transit.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};
use crate::params::{AtomicSystem, FieldConfig, Probe};
use crate::susceptibility::{chi, group_index, DerivativeMode};
use crate::units::SPEED_OF_LIGHT_AU;

#[derive(Clone, Debug, PartialEq)]
pub struct ProbePulse {
    pub carrier: Probe,
    /// Intensity FWHM of the envelope (a.u. of time).
    pub envelope_fwhm_time: f64,
    pub samples: Vec<Complex64>,
    pub grid_dt: f64,
}

impl ProbePulse {
    /// Gaussian envelope sampled on `n` points spanning `span_fwhm` FWHMs,
    /// centered on t = 0.
    pub fn gaussian(carrier: Probe, fwhm: f64, n: usize, span_fwhm: f64) -> Result<Self> {
        if !(fwhm > 0.0 && fwhm.is_finite()) {
            return Err(Error::invalid("pulse_fwhm", "must be finite and > 0"));
        }
        if n < 16 {
            return Err(Error::invalid("pulse_samples", "need at least 16 samples"));
        }
        if !(span_fwhm > 6.0) {
            return Err(Error::invalid("pulse_span", "time grid must cover more than 6 FWHM"));
        }
        let dt = span_fwhm * fwhm / n as f64;
        let samples = (0..n)
            .map(|k| {
                let t = (k as f64 - (n / 2) as f64) * dt;
                Complex64::new((-2.0 * LN_2 * t * t / (fwhm * fwhm)).exp(), 0.0)
            })
            .collect();
        Ok(ProbePulse {
            carrier,
            envelope_fwhm_time: fwhm,
            samples,
            grid_dt: dt,
        })
    }

    /// Gaussian with a given spectral intensity FWHM (angular frequency).
    pub fn gaussian_with_bandwidth(carrier: Probe, spectral_fwhm: f64, n: usize, span_fwhm: f64) -> Result<Self> {
        Self::gaussian(carrier, 4.0 * LN_2 / spectral_fwhm, n, span_fwhm)
    }

    pub fn times(&self) -> Vec<f64> {
        let n = self.samples.len();
        (0..n).map(|k| (k as f64 - (n / 2) as f64) * self.grid_dt).collect()
    }

    /// Angular-frequency FWHM of |spectrum|² for the Gaussian envelope.
    pub fn spectral_fwhm(&self) -> f64 {
        4.0 * LN_2 / self.envelope_fwhm_time
    }

    pub fn check_narrowband(&self, window_width: f64) -> Result<()> {
        if self.spectral_fwhm() >= 0.3 * window_width {
            return Err(Error::invalid(
                "pulse_fwhm",
                format!(
                    "spectral width {:e} a.u. is not below 0.3 x window width {:e} a.u.",
                    self.spectral_fwhm(),
                    window_width
                ),
            ));
        }
        Ok(())
    }

    fn duration(&self) -> f64 {
        self.grid_dt * self.samples.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PropagationResult {
    /// Intensity-centroid shift relative to the input, in the retarded frame.
    pub delay: f64,
    pub transmitted_energy_fraction: f64,
    pub output_samples: Vec<Complex64>,
}

fn energy(samples: &[Complex64]) -> f64 {
    samples.iter().map(|a| a.norm_sqr()).sum()
}

fn centroid(times: &[f64], samples: &[Complex64]) -> f64 {
    let e = energy(samples);
    times.iter().zip(samples).map(|(t, a)| t * a.norm_sqr()).sum::<f64>() / e
}

/// Angular offsets ν_k of the FFT bins; bin k carries e^{+iν_k t}.
fn fft_offsets(n: usize, dt: f64) -> Vec<f64> {
    let base = 2.0 * PI / (n as f64 * dt);
    (0..n)
        .map(|k| {
            let signed = if k < n.div_ceil(2) { k as i64 } else { k as i64 - n as i64 };
            signed as f64 * base
        })
        .collect()
}

/// Propagates through length `length_l` (Bohr) using an arbitrary
/// susceptibility. `support`, when given, is the detuning range on which χ
/// is known; every spectral bin must fall inside it.
pub fn propagate_with<F>(
    pulse: &ProbePulse,
    length_l: f64,
    support: Option<(f64, f64)>,
    susceptibility: F,
) -> Result<PropagationResult>
where
    F: Fn(Probe) -> Result<Complex64>,
{
    if !(length_l >= 0.0 && length_l.is_finite()) {
        return Err(Error::invalid("length", "must be finite and >= 0"));
    }
    let n = pulse.samples.len();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);

    let mut spectrum = pulse.samples.clone();
    forward.process(&mut spectrum);
    for (bin, nu) in spectrum.iter_mut().zip(fft_offsets(n, pulse.grid_dt)) {
        // e^{−iωt} carrier convention: bin ν sits at physical ω = ω_c − ν
        let probe = pulse.carrier.shifted(-nu);
        if let Some((lo, hi)) = support {
            if probe.detuning < lo || probe.detuning > hi {
                return Err(Error::SpectralSupport {
                    detuning: probe.detuning,
                    lo,
                    hi,
                });
            }
        }
        let c = susceptibility(probe)?;
        let phase = Complex64::i() * c * (probe.omega1 * length_l / (2.0 * SPEED_OF_LIGHT_AU));
        *bin *= phase.exp();
    }
    inverse.process(&mut spectrum);
    let scale = 1.0 / n as f64;
    let output: Vec<Complex64> = spectrum.into_iter().map(|a| a * scale).collect();

    let times = pulse.times();
    let delay = centroid(&times, &output) - centroid(&times, &pulse.samples);
    if delay.abs() + 3.0 * pulse.envelope_fwhm_time > 0.5 * pulse.duration() {
        return Err(Error::invalid(
            "pulse_span",
            "time grid too short: the delayed pulse comes within 3 FWHM of the edge",
        ));
    }
    Ok(PropagationResult {
        delay,
        transmitted_energy_fraction: energy(&output) / energy(&pulse.samples),
        output_samples: output,
    })
}

/// Propagates through the dressed medium with the closed-form χ.
pub fn propagate(
    pulse: &ProbePulse,
    sys: &AtomicSystem,
    field: &FieldConfig,
    length_l: f64,
) -> Result<PropagationResult> {
    let support = field.probe_grid.detuning_range(sys);
    propagate_with(pulse, length_l, Some(support), |p| chi(p, sys, field))
}

/// (n_g − 1)·L/c at the window center.
pub fn delay_prediction(sys: &AtomicSystem, field: &FieldConfig, length_l: f64) -> Result<f64> {
    let ng = group_index(field.dark_probe(sys), sys, field, DerivativeMode::Analytic)?;
    Ok((ng - 1.0) * length_l / SPEED_OF_LIGHT_AU)
}
