//! Stationary solution of the first-order density-matrix equations with the
//! continuum replaced by a finite set of energy bins.
//!
//! Each bin k has energy E_k = E_a + u_k, trapezoidal weight w_k and a finite
//! damping η standing in for the η → 0⁺ prescription. With E_p = E_b + ω₁,
//! the stationary equations are
//!
//! ```text
//! (E_k − E_p − iη) σ_k − ½ d_kc ε₂ σ_cb = ½ d_kb ε₁
//! −(Δ + iγ_cb) σ_cb − ½ ε₂ Σ_k w_k d_ck σ_k = 0
//! ```
//!
//! Bins couple to each other only through σ_cb (arrow structure), so the
//! system reduces to one scalar equation plus back-substitution.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::params::{AtomicSystem, ContinuumShape, FieldConfig, Level, Probe};
use crate::susceptibility::{chi, prefactor, Method, SusceptibilitySpectrum};

/// Half-width (in γ) of the dense region around E_a.
const DENSE_GAMMAS: f64 = 50.0;
/// Half-width (in η) of the dense region around each pole.
const DENSE_ETAS: f64 = 50.0;
/// Half-width (in γ) of the whole band.
const BAND_GAMMAS: f64 = 1e4;
const MIN_COARSE_PER_REGION: usize = 16;

/// Discretized continuum. Energies are stored as offsets from `reference`
/// (E_a) so that sub-γ spacings survive at |E| ~ 0.1 a.u.
#[derive(Clone, Debug, PartialEq)]
pub struct BinSet {
    pub reference: f64,
    pub offsets: Vec<f64>,
    pub weights: Vec<f64>,
    pub eta: f64,
}

impl BinSet {
    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn energies(&self) -> impl Iterator<Item = f64> + '_ {
        self.offsets.iter().map(move |u| self.reference + u)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) {
            return Err(Error::invalid("eta", "must be > 0"));
        }
        if self.offsets.len() != self.weights.len() || self.offsets.len() < 2 {
            return Err(Error::invalid("bins", "need matching energies and weights"));
        }
        if self.offsets.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("bins", "energies must be strictly increasing"));
        }
        if self.weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::invalid("bins", "weights must be positive"));
        }
        Ok(())
    }

    /// Largest bin spacing within `halfwidth` of detuning `x`.
    pub fn max_spacing_near(&self, x: f64, halfwidth: f64) -> f64 {
        self.offsets
            .windows(2)
            .filter(|w| w[1] >= x - halfwidth && w[0] <= x + halfwidth)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    fn amplitude(&self, sys: &AtomicSystem, u: f64) -> f64 {
        match sys.continuum {
            ContinuumShape::Flat => 1.0,
            ContinuumShape::Fano => (u + sys.q * sys.gamma) / u.hypot(sys.gamma),
        }
    }

    /// Signed dipole d_kE for every bin; |d|² reproduces the Fano profile.
    pub fn dipoles(&self, sys: &AtomicSystem, level: Level) -> Vec<f64> {
        let b = sys.coupling(level);
        self.offsets.iter().map(|&u| b * self.amplitude(sys, u)).collect()
    }
}

/// Geometric spacings growing away from a dense edge: `m` steps, first step
/// at most `h`, summing to `length`.
fn graded_steps(length: f64, h: f64, m: usize) -> Vec<f64> {
    let mf = m as f64;
    if h * mf >= length {
        return vec![length / mf; m];
    }
    let total = |r: f64| h * (r.powf(mf) - 1.0) / (r - 1.0);
    let (mut lo, mut hi) = (1.0 + 1e-12, 2.0);
    while total(hi) < length {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) < length {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // total(hi) >= length, so the rescale below only shrinks steps
    let r = hi;
    let mut steps: Vec<f64> = (0..m).map(|i| h * r.powi(i as i32)).collect();
    let sum: f64 = steps.iter().sum();
    let fix = length / sum;
    steps.iter_mut().for_each(|s| *s *= fix);
    steps
}

struct Layout {
    /// Disjoint dense blocks in increasing order.
    dense: Vec<(f64, f64)>,
    dense_steps: Vec<usize>,
    /// Coarse regions before, between and after the dense blocks.
    coarse: Vec<(f64, f64)>,
    required: usize,
    spacing: f64,
}

fn layout(sys: &AtomicSystem, detuning_range: (f64, f64), eta: f64) -> Result<Layout> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::invalid("eta", format!("must be finite and > 0, got {eta}")));
    }
    let (x_lo, x_hi) = detuning_range;
    if !(x_lo <= x_hi) {
        return Err(Error::invalid("omega1_range", "lower end above upper end"));
    }
    let h = eta / 5.0;
    let g = sys.gamma;
    let mut blocks = vec![
        (-DENSE_GAMMAS * g, DENSE_GAMMAS * g),
        (x_lo - DENSE_ETAS * eta, x_hi + DENSE_ETAS * eta),
    ];
    blocks.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut dense: Vec<(f64, f64)> = Vec::new();
    for (a, b) in blocks {
        match dense.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => dense.push((a, b)),
        }
    }
    let band_lo = (-BAND_GAMMAS * g).min(dense[0].0 - g);
    let band_hi = (BAND_GAMMAS * g).max(dense[dense.len() - 1].1 + g);
    // margin so that rounded offsets still differ by less than h
    let dense_steps: Vec<usize> = dense
        .iter()
        .map(|(a, b)| {
            let mut m = ((b - a) / h).floor() as usize + 1;
            while (b - a) / m as f64 > h * (1.0 - 1e-9) {
                m += 1;
            }
            m
        })
        .collect();
    let mut coarse = vec![(band_lo, dense[0].0)];
    coarse.extend(dense.windows(2).map(|w| (w[0].1, w[1].0)));
    coarse.push((dense[dense.len() - 1].1, band_hi));
    let required = dense_steps.iter().sum::<usize>() + coarse.len() * MIN_COARSE_PER_REGION + 1;
    Ok(Layout {
        dense,
        dense_steps,
        coarse,
        required,
        spacing: h,
    })
}

/// Bins dense (spacing < η/5) within ±50γ of E_a and within ±50η of every
/// pole reachable from `detuning_range`, geometrically coarser out to ±10⁴γ.
pub fn build_binset(
    sys: &AtomicSystem,
    detuning_range: (f64, f64),
    n_bins: usize,
    eta: f64,
) -> Result<BinSet> {
    if n_bins < 100 {
        return Err(Error::invalid("n_bins", format!("must be >= 100, got {n_bins}")));
    }
    let plan = layout(sys, detuning_range, eta)?;
    if n_bins < plan.required {
        return Err(Error::InfeasibleBins {
            required: plan.required,
            given: n_bins,
        });
    }
    let h = plan.spacing;
    let spare = n_bins - (plan.required - plan.coarse.len() * MIN_COARSE_PER_REGION);
    let shares: Vec<f64> = plan
        .coarse
        .iter()
        .map(|(a, b)| (1.0 + (b - a) / h).ln())
        .collect();
    let total_share: f64 = shares.iter().sum();
    let mut counts: Vec<usize> = shares
        .iter()
        .map(|w| (((spare as f64) * w / total_share).floor() as usize).max(MIN_COARSE_PER_REGION))
        .collect();
    while counts.iter().sum::<usize>() > spare {
        let i = (0..counts.len()).max_by_key(|&i| counts[i]).expect("nonempty");
        counts[i] -= 1;
    }

    let last = plan.coarse.len() - 1;
    let mut offsets = Vec::with_capacity(n_bins);
    for (idx, &(a, b)) in plan.coarse.iter().enumerate() {
        let m = counts[idx];
        let steps = if idx == 0 {
            let mut s = graded_steps(b - a, h, m);
            s.reverse();
            s
        } else if idx == last {
            graded_steps(b - a, h, m)
        } else {
            let left = graded_steps(0.5 * (b - a), h, m / 2);
            let mut right = graded_steps(0.5 * (b - a), h, m - m / 2);
            right.reverse();
            left.into_iter().chain(right).collect()
        };
        // each segment contributes its start and interior points
        let mut pos = a;
        offsets.push(a);
        for s in &steps[..steps.len() - 1] {
            pos += s;
            offsets.push(pos);
        }
        if let Some(&(da, db)) = plan.dense.get(idx) {
            let m = plan.dense_steps[idx];
            let step = (db - da) / m as f64;
            offsets.extend((0..m).map(|i| da + step * i as f64));
        }
    }
    offsets.push(plan.coarse[last].1);

    let n = offsets.len();
    let weights = (0..n)
        .map(|k| {
            let left = if k > 0 { offsets[k] - offsets[k - 1] } else { 0.0 };
            let right = if k + 1 < n { offsets[k + 1] - offsets[k] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect();
    let bins = BinSet {
        reference: sys.e_a,
        offsets,
        weights,
        eta,
    };
    bins.validate()?;
    Ok(bins)
}

/// A bin set with `coarse_bins` bins beyond what the dense blocks need.
pub fn auto_binset(
    sys: &AtomicSystem,
    detuning_range: (f64, f64),
    eta: f64,
    coarse_bins: usize,
) -> Result<BinSet> {
    let plan = layout(sys, detuning_range, eta)?;
    let budget = (plan.required + coarse_bins).max(100);
    build_binset(sys, detuning_range, budget, eta)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StationaryState {
    pub sigma_eb: Vec<Complex64>,
    pub sigma_cb: Complex64,
    pub probe_amplitude: f64,
    pub probe: Probe,
}

struct Couplings {
    d_b: Vec<f64>,
    d_c: Vec<f64>,
    /// 1 / (E_p − E_k + iη)
    resolvent: Vec<Complex64>,
}

fn couplings(sys: &AtomicSystem, probe: Probe, bins: &BinSet) -> Couplings {
    let x = probe.detuning;
    Couplings {
        d_b: bins.dipoles(sys, Level::B),
        d_c: bins.dipoles(sys, Level::C),
        resolvent: bins
            .offsets
            .iter()
            .map(|&u| Complex64::new(x - u, bins.eta).inv())
            .collect(),
    }
}

fn check_eps1(eps1: f64) -> Result<()> {
    if !(eps1 >= 0.0 && eps1.is_finite()) {
        return Err(Error::invalid("eps1", format!("must be finite and >= 0, got {eps1}")));
    }
    Ok(())
}

/// Arrow-structure solve: eliminate the bins into one equation for σ_cb.
pub fn stationary_solve(
    sys: &AtomicSystem,
    field: &FieldConfig,
    probe: Probe,
    bins: &BinSet,
    eps1: f64,
) -> Result<StationaryState> {
    check_eps1(eps1)?;
    let c = couplings(sys, probe, bins);
    let mut g_cb = Complex64::new(0.0, 0.0);
    let mut g_cc = Complex64::new(0.0, 0.0);
    for k in 0..bins.len() {
        let wr = c.resolvent[k] * bins.weights[k];
        g_cb += wr * (c.d_c[k] * c.d_b[k]);
        g_cc += wr * (c.d_c[k] * c.d_c[k]);
    }
    let eps2 = field.eps2;
    let delta = Complex64::new(field.two_photon_detuning(sys, probe), sys.gamma_cb);
    let d = delta - g_cc * (0.25 * eps2 * eps2);
    let sigma_cb = if eps2 == 0.0 {
        Complex64::new(0.0, 0.0)
    } else if d == Complex64::new(0.0, 0.0) {
        return Err(Error::SingularSystem {
            detuning: probe.detuning,
        });
    } else {
        g_cb * (0.25 * eps2 * eps1) / d
    };
    let sigma_eb = (0..bins.len())
        .map(|k| (sigma_cb * (c.d_c[k] * eps2) + c.d_b[k] * eps1) * c.resolvent[k] * -0.5)
        .collect();
    Ok(StationaryState {
        sigma_eb,
        sigma_cb,
        probe_amplitude: eps1,
        probe,
    })
}

/// Dense LU solve of the full (n+1)-dimensional system; O(n³), for
/// cross-checking [`stationary_solve`] on small bin sets.
pub fn stationary_solve_dense(
    sys: &AtomicSystem,
    field: &FieldConfig,
    probe: Probe,
    bins: &BinSet,
    eps1: f64,
) -> Result<StationaryState> {
    check_eps1(eps1)?;
    let (a, rhs) = assemble(sys, field, probe, bins, eps1);
    let sol = a.lu().solve(&rhs).ok_or(Error::SingularSystem {
        detuning: probe.detuning,
    })?;
    let n = bins.len();
    Ok(StationaryState {
        sigma_eb: sol.iter().take(n).copied().collect(),
        sigma_cb: sol[n],
        probe_amplitude: eps1,
        probe,
    })
}

fn assemble(
    sys: &AtomicSystem,
    field: &FieldConfig,
    probe: Probe,
    bins: &BinSet,
    eps1: f64,
) -> (DMatrix<Complex64>, DVector<Complex64>) {
    let n = bins.len();
    let d_b = bins.dipoles(sys, Level::B);
    let d_c = bins.dipoles(sys, Level::C);
    let eps2 = field.eps2;
    let mut a = DMatrix::<Complex64>::zeros(n + 1, n + 1);
    let mut rhs = DVector::<Complex64>::zeros(n + 1);
    for k in 0..n {
        a[(k, k)] = Complex64::new(bins.offsets[k] - probe.detuning, -bins.eta);
        a[(k, n)] = Complex64::new(-0.5 * d_c[k] * eps2, 0.0);
        a[(n, k)] = Complex64::new(-0.5 * eps2 * bins.weights[k] * d_c[k], 0.0);
        rhs[k] = Complex64::new(0.5 * d_b[k] * eps1, 0.0);
    }
    a[(n, n)] = -Complex64::new(field.two_photon_detuning(sys, probe), sys.gamma_cb);
    (a, rhs)
}

impl StationaryState {
    /// Normwise backward error ‖Ax − b‖∞ / (‖A‖∞‖x‖∞ + ‖b‖∞) of the
    /// defining linear system.
    pub fn relative_residual(&self, sys: &AtomicSystem, field: &FieldConfig, bins: &BinSet) -> f64 {
        let (a, rhs) = assemble(sys, field, self.probe, bins, self.probe_amplitude);
        let mut x = DVector::<Complex64>::zeros(bins.len() + 1);
        for (k, s) in self.sigma_eb.iter().enumerate() {
            x[k] = *s;
        }
        x[bins.len()] = self.sigma_cb;
        let r = &a * &x - &rhs;
        let inf = |v: &DVector<Complex64>| v.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let a_norm = a
            .row_iter()
            .map(|row| row.iter().map(|c| c.norm()).sum::<f64>())
            .fold(0.0, f64::max);
        let scale = a_norm * inf(&x) + inf(&rhs);
        if scale == 0.0 {
            0.0
        } else {
            inf(&r) / scale
        }
    }
}

/// χ = (N/ε₀) Σ_k w_k d_bk σ_k / ε₁.
pub fn chi_from_state(state: &StationaryState, sys: &AtomicSystem, bins: &BinSet) -> Result<Complex64> {
    if !(state.probe_amplitude > 0.0) {
        return Err(Error::invalid("eps1", "susceptibility needs a nonzero probe amplitude"));
    }
    let d_b = bins.dipoles(sys, Level::B);
    let sum: Complex64 = state
        .sigma_eb
        .iter()
        .zip(&d_b)
        .zip(&bins.weights)
        .map(|((s, d), w)| s * (d * w))
        .sum();
    // N/ε₀ = 4πN = −2·prefactor
    Ok(sum * (-2.0 * prefactor(sys) / state.probe_amplitude))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadySettings {
    /// Damping in units of γ.
    pub eta_over_gamma: f64,
    pub eps1: f64,
    /// Richardson-extrapolate χ from η and η/2.
    pub extrapolate: bool,
    /// Spare bins beyond the dense blocks.
    pub coarse_bins: usize,
}

impl Default for SteadySettings {
    fn default() -> Self {
        SteadySettings {
            eta_over_gamma: 0.04,
            eps1: 1e-12,
            extrapolate: true,
            coarse_bins: 400,
        }
    }
}

pub fn chi_steady(
    sys: &AtomicSystem,
    field: &FieldConfig,
    probe: Probe,
    bins: &BinSet,
    eps1: f64,
) -> Result<Complex64> {
    let state = stationary_solve(sys, field, probe, bins, eps1)?;
    chi_from_state(&state, sys, bins)
}

/// 2χ(η/2) − χ(η).
pub fn chi_steady_extrapolated(
    sys: &AtomicSystem,
    field: &FieldConfig,
    probe: Probe,
    coarse: &BinSet,
    fine: &BinSet,
    eps1: f64,
) -> Result<Complex64> {
    let a = chi_steady(sys, field, probe, coarse, eps1)?;
    let b = chi_steady(sys, field, probe, fine, eps1)?;
    Ok(b * 2.0 - a)
}

/// Evaluates χ at every probe with bins built once for the whole set.
pub fn chi_steady_many(
    sys: &AtomicSystem,
    field: &FieldConfig,
    probes: &[Probe],
    settings: &SteadySettings,
) -> Result<Vec<Complex64>> {
    if probes.is_empty() {
        return Ok(Vec::new());
    }
    let lo = probes.iter().map(|p| p.detuning).fold(f64::INFINITY, f64::min);
    let hi = probes.iter().map(|p| p.detuning).fold(f64::NEG_INFINITY, f64::max);
    let eta = settings.eta_over_gamma * sys.gamma;
    let coarse = auto_binset(sys, (lo, hi), eta, settings.coarse_bins)?;
    if !settings.extrapolate {
        return probes
            .par_iter()
            .map(|&p| chi_steady(sys, field, p, &coarse, settings.eps1))
            .collect();
    }
    let fine = auto_binset(sys, (lo, hi), 0.5 * eta, settings.coarse_bins)?;
    probes
        .par_iter()
        .map(|&p| chi_steady_extrapolated(sys, field, p, &coarse, &fine, settings.eps1))
        .collect()
}

impl SusceptibilitySpectrum {
    pub fn steady_state(sys: &AtomicSystem, field: &FieldConfig, settings: &SteadySettings) -> Result<Self> {
        sys.validate()?;
        field.validate()?;
        let probes: Vec<Probe> = field.probe_grid.probes(sys).collect();
        let chi = chi_steady_many(sys, field, &probes, settings)?;
        Ok(Self::from_parts(sys, field, chi, Method::SteadyState))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConvergenceRow {
    pub eta: f64,
    pub n_bins: usize,
    pub re_chi: f64,
    pub im_chi: f64,
    /// |χ_bins − χ_closed|
    pub deviation: f64,
}

/// χ at one probe for a sequence of η, bins scaled with η.
pub fn convergence_table(
    sys: &AtomicSystem,
    field: &FieldConfig,
    probe: Probe,
    etas: &[f64],
    eps1: f64,
) -> Result<Vec<ConvergenceRow>> {
    let exact = chi(probe, sys, field)?;
    etas.iter()
        .map(|&eta| {
            let bins = auto_binset(sys, (probe.detuning, probe.detuning), eta, 400)?;
            let c = chi_steady(sys, field, probe, &bins, eps1)?;
            Ok(ConvergenceRow {
                eta,
                n_bins: bins.len(),
                re_chi: c.re,
                im_chi: c.im,
                deviation: (c - exact).norm(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Preset;
    use crate::susceptibility::undressed_peak;

    fn small_bins(sys: &AtomicSystem, eta_gammas: f64) -> BinSet {
        auto_binset(sys, (0.0, 0.0), eta_gammas * sys.gamma, 200).unwrap()
    }

    #[test]
    fn spacing_near_pole() {
        let (sys, _) = Preset::Fig2.build();
        let eta = 10.0 * sys.gamma;
        let bins = auto_binset(&sys, (0.0, 0.0), eta, 200).unwrap();
        // accumulated coarse offsets meet the dense block to within rounding
        assert!(bins.max_spacing_near(0.0, 5.0 * eta) <= 2.0 * sys.gamma * (1.0 + 1e-12));
        assert!(bins.max_spacing_near(0.0, 50.0 * sys.gamma) < eta / 5.0);
        assert!(bins.offsets[0] <= -1e4 * sys.gamma);
        assert!(*bins.offsets.last().unwrap() >= 1e4 * sys.gamma);
    }

    #[test]
    fn too_few_bins() {
        let (sys, _) = Preset::Fig2.build();
        let err = build_binset(&sys, (0.0, 0.0), 100, 0.04 * sys.gamma);
        assert!(matches!(err, Err(Error::InfeasibleBins { .. })));
        assert!(build_binset(&sys, (0.0, 0.0), 50, 10.0 * sys.gamma).is_err());
    }

    #[test]
    fn fig2_default_bins_valid() {
        let (sys, field) = Preset::Fig2.build();
        let eta = SteadySettings::default().eta_over_gamma * sys.gamma;
        let bins = auto_binset(&sys, field.probe_grid.detuning_range(&sys), eta, 400).unwrap();
        bins.validate().unwrap();
        let total: f64 = bins.weights.iter().sum();
        let span = bins.offsets.last().unwrap() - bins.offsets[0];
        assert!((total - span).abs() < 1e-9 * span);
    }

    #[test]
    fn zero_probe_gives_zero_coherences() {
        let (sys, field) = Preset::Fig2.build();
        let bins = small_bins(&sys, 1.0);
        let p = Probe::from_detuning(&sys, 0.3 * sys.gamma);
        let s = stationary_solve(&sys, &field, p, &bins, 0.0).unwrap();
        assert!(s.sigma_eb.iter().all(|c| c.norm() == 0.0));
        assert_eq!(s.sigma_cb.norm(), 0.0);
    }

    #[test]
    fn linear_in_probe() {
        let (sys, field) = Preset::Fig3.build();
        let bins = small_bins(&sys, 1.0);
        let p = Probe::from_detuning(&sys, 0.7 * sys.gamma);
        let a = stationary_solve(&sys, &field, p, &bins, 1e-12).unwrap();
        let b = stationary_solve(&sys, &field, p, &bins, 2e-12).unwrap();
        for (x, y) in a.sigma_eb.iter().zip(&b.sigma_eb) {
            assert!((y - x * 2.0).norm() <= 1e-15 * y.norm());
        }
        assert!((b.sigma_cb - a.sigma_cb * 2.0).norm() <= 1e-15 * b.sigma_cb.norm());
        let ca = chi_from_state(&a, &sys, &bins).unwrap();
        let cb = chi_from_state(&b, &sys, &bins).unwrap();
        assert!((ca - cb).norm() <= 1e-14 * ca.norm());
    }

    #[test]
    fn residual_is_tiny() {
        let (sys, field) = Preset::Fig2.build();
        let bins = small_bins(&sys, 0.5);
        for x in [-3.0, 0.0, 0.25, 2.0] {
            let p = Probe::from_detuning(&sys, x * sys.gamma);
            let s = stationary_solve(&sys, &field, p, &bins, 1e-12).unwrap();
            let r = s.relative_residual(&sys, &field, &bins);
            assert!(r < 1e-12, "{x} {r}");
        }
    }

    #[test]
    fn dense_solve_agrees_with_arrow_solve() {
        let (sys, field) = Preset::Fig2.build();
        let bins = auto_binset(&sys, (0.0, 0.0), 60.0 * sys.gamma, 100).unwrap();
        let p = Probe::from_detuning(&sys, 1.5 * sys.gamma);
        let a = stationary_solve(&sys, &field, p, &bins, 1e-12).unwrap();
        let b = stationary_solve_dense(&sys, &field, p, &bins, 1e-12).unwrap();
        let ca = chi_from_state(&a, &sys, &bins).unwrap();
        let cb = chi_from_state(&b, &sys, &bins).unwrap();
        assert!((ca - cb).norm() < 1e-10 * ca.norm(), "{ca} {cb}");
        assert!((a.sigma_cb - b.sigma_cb).norm() < 1e-10 * a.sigma_cb.norm());
    }

    #[test]
    fn dark_state_in_bins() {
        let (sys, field) = Preset::Fig2.build();
        let bins = small_bins(&sys, 0.1);
        let c = chi_steady(&sys, &field, field.dark_probe(&sys), &bins, 1e-12).unwrap();
        assert!(c.norm() < 1e-3 * undressed_peak(&sys));
    }

    #[test]
    fn undressed_case_matches_closed_form() {
        let (sys, field) = Preset::Fig1.build();
        let peak = undressed_peak(&sys);
        let probes: Vec<Probe> = (0..20)
            .map(|k| Probe::from_detuning(&sys, (-4.75 + 0.5 * k as f64) * sys.gamma))
            .collect();
        let chis = chi_steady_many(&sys, &field, &probes, &SteadySettings::default()).unwrap();
        for (p, c) in probes.iter().zip(chis) {
            let exact = chi(*p, &sys, &field).unwrap();
            assert!((c - exact).norm() < 0.01 * exact.norm().max(1e-3 * peak), "{p:?} {c} {exact}");
        }
    }

    #[test]
    fn first_order_convergence_in_eta() {
        let (sys, field) = Preset::Fig2.build();
        let p = Probe::from_detuning(&sys, 0.8 * sys.gamma);
        let etas: Vec<f64> = [0.1, 0.05, 0.025, 0.0125].iter().map(|e| e * sys.gamma).collect();
        let rows = convergence_table(&sys, &field, p, &etas, 1e-12).unwrap();
        for w in rows.windows(2) {
            let order = (w[0].deviation / w[1].deviation).log2();
            assert!(order >= 0.9, "{rows:?}");
        }
    }
}
