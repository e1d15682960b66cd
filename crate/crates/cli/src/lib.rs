//! Command-line front end: argument parsing, run orchestration and the
//! ordered output stage. `main.rs` only maps results to exit codes.

use std::fmt;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use fano_eit::analysis::{fit_scaling, sweep_windows, MIN_SWEEP_POINTS};
use fano_eit::io::{self as fio, PulseRow};
use fano_eit::oracle::compare::{QUADRATURE_TOL, STEADY_TOL};
use fano_eit::oracle::{equivalence_report, sample_probes, EquivalenceReport, QuadratureSettings, SteadySettings};
use fano_eit::propagation::{delay_prediction, propagate};
use fano_eit::susceptibility::{group_index, undressed_peak, DerivativeMode};
use fano_eit::{
    find_window, AtomicSystem, ContinuumShape, Error, FieldConfig, Method, Preset, ProbeGrid,
    ProbePulse, SusceptibilitySpectrum, SweepVariable, UnitContext, WindowReport,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

const WINDOW_THRESHOLD: f64 = 0.5;
const DEFAULT_GRID_POINTS: usize = 2001;
const DEFAULT_GRID_HALFWIDTH_GAMMAS: f64 = 50.0;
const PULSE_SAMPLES: usize = 4096;
const PULSE_SPAN_FWHM: f64 = 24.0;
/// Default pulse bandwidth as a fraction of the window width.
const PULSE_BANDWIDTH_FRACTION: f64 = 0.1;

#[derive(Debug, Parser)]
#[command(name = "fano-eit", version, about = "Probe susceptibility of a Λ medium coupled through a Fano continuum")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// χ over the probe grid, as CSV plus a JSON summary.
    Spectrum(SpectrumArgs),
    /// Transparency-window report.
    Window(WindowArgs),
    /// Window width against ε₂ or q, with a log–log fit.
    Sweep(SweepArgs),
    /// Closed form against quadrature and the discretized continuum.
    Oracle(OracleArgs),
    /// Delay of a narrowband probe pulse through a slab of the medium.
    Propagate(PropagateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Closed,
    Quadrature,
    Steady,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepVarArg {
    Eps2,
    Q,
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct SourceArgs {
    /// Built-in parameter set (fig1..fig5).
    #[arg(long, value_parser = parse_preset)]
    pub preset: Option<Preset>,
    /// Parameter file (`key = value` lines).
    #[arg(long)]
    pub params: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub eps2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub q: Option<f64>,
    #[arg(long = "gamma-cb", allow_negative_numbers = true)]
    pub gamma_cb: Option<f64>,
    /// Replace the Fano continuum by a structureless one.
    #[arg(long)]
    pub flat: bool,
    /// Probe frequency at the grid center (a.u.); any grid flag selects a uniform grid.
    #[arg(long = "grid-center", allow_negative_numbers = true)]
    pub grid_center: Option<f64>,
    #[arg(long = "grid-halfwidth")]
    pub grid_halfwidth: Option<f64>,
    #[arg(long = "grid-points")]
    pub grid_points: Option<usize>,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value = "closed")]
    pub method: MethodArg,
}

#[derive(Debug, Clone, Args)]
pub struct WindowArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Fraction of the undressed absorption that defines the window edge.
    #[arg(long, default_value_t = WINDOW_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long = "sweep-var", value_enum)]
    pub sweep_var: SweepVarArg,
    #[arg(long = "sweep-values", value_delimiter = ',', num_args = 1..)]
    pub sweep_values: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Replaces the quadrature pass tolerance (testing hook).
    #[arg(long = "quadrature-tol-override", hide = true)]
    pub quadrature_tol_override: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct PropagateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long = "length-cm", default_value_t = 1.0)]
    pub length_cm: f64,
    /// Intensity FWHM of the Gaussian envelope; defaults to a bandwidth of
    /// a tenth of the window width.
    #[arg(long = "pulse-fwhm-ns")]
    pub pulse_fwhm_ns: Option<f64>,
}

fn parse_preset(s: &str) -> std::result::Result<Preset, String> {
    s.parse::<Preset>().map_err(|e| e.to_string())
}

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    /// A check ran to completion and failed.
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_invalid_input() => EXIT_INVALID_INPUT,
            CliError::Core(_) | CliError::Failed(_) => EXIT_NUMERICAL,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Failed(msg) => f.write_str(msg),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn invalid(name: &'static str, reason: impl Into<String>) -> CliError {
    CliError::Core(Error::InvalidParameter {
        name,
        reason: reason.into(),
    })
}

/// Parameters after preset/file loading and every override.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub source: Source,
    pub sys: AtomicSystem,
    pub field: FieldConfig,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Preset(Preset),
    ParamsFile(String),
}

pub fn resolve(args: &CommonArgs) -> CliResult<Resolved> {
    let (source, mut sys, mut field) = match (&args.source.preset, &args.source.params) {
        (Some(p), None) => {
            let (s, f) = p.build();
            (Source::Preset(*p), s, f)
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| invalid("params", format!("cannot read {}: {e}", path.display())))?;
            let (s, f) = fio::parse_params(&text)?;
            (Source::ParamsFile(path.display().to_string()), s, f)
        }
        _ => return Err(invalid("source", "give exactly one of --preset and --params")),
    };
    if let Some(e) = args.eps2 {
        field.eps2 = e;
    }
    if let Some(q) = args.q {
        sys.q = q;
    }
    if let Some(g) = args.gamma_cb {
        sys.gamma_cb = g;
    }
    if args.flat {
        sys.continuum = ContinuumShape::Flat;
    }
    if args.grid_center.is_some() || args.grid_halfwidth.is_some() || args.grid_points.is_some() {
        field.probe_grid = ProbeGrid::uniform(
            args.grid_center.unwrap_or_else(|| sys.resonance_frequency()),
            args.grid_halfwidth.unwrap_or(DEFAULT_GRID_HALFWIDTH_GAMMAS * sys.gamma),
            args.grid_points.unwrap_or(DEFAULT_GRID_POINTS),
        )?;
    }
    sys.validate()?;
    field.validate()?;
    Ok(Resolved { source, sys, field })
}

#[derive(Debug, Serialize)]
struct GridSummary {
    kind: &'static str,
    center_au: f64,
    min_offset_au: f64,
    max_offset_au: f64,
    points: usize,
}

/// Resolved parameters in file units, for provenance in every JSON report.
#[derive(Debug, Serialize)]
struct ParameterSummary {
    source: Source,
    fingerprint: String,
    e_b_au: f64,
    e_c_au: f64,
    e_a_au: f64,
    gamma_au: f64,
    q: f64,
    b_b_au: f64,
    b_c_au: f64,
    gamma_cb_au: f64,
    density_cm3: f64,
    density_au: f64,
    continuum: ContinuumShape,
    eps2_au: f64,
    omega2_au: f64,
    grid: GridSummary,
}

impl Resolved {
    fn summary(&self) -> ParameterSummary {
        let (sys, field) = (&self.sys, &self.field);
        let g = &field.probe_grid;
        let uniform = g.uniform_halfwidth().is_some();
        ParameterSummary {
            source: self.source.clone(),
            fingerprint: fio::fingerprint(sys, field),
            e_b_au: sys.e_b,
            e_c_au: sys.e_c,
            e_a_au: sys.e_a,
            gamma_au: sys.gamma,
            q: sys.q,
            b_b_au: sys.b_b,
            b_c_au: sys.b_c,
            gamma_cb_au: sys.gamma_cb,
            density_cm3: UnitContext::CODATA2018.density_to_cm3(sys.density_n),
            density_au: sys.density_n,
            continuum: sys.continuum,
            eps2_au: field.eps2,
            omega2_au: field.omega2,
            grid: GridSummary {
                kind: if uniform { "uniform" } else { "nested" },
                center_au: g.center,
                min_offset_au: g.offsets[0],
                max_offset_au: g.offsets[g.len() - 1],
                points: g.len(),
            },
        }
    }
}

fn prepare_out(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| invalid("out", format!("cannot create {}: {e}", dir.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(Error::Json)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Runs one command; returns the list of files written.
pub fn run(cli: Cli) -> CliResult<Vec<PathBuf>> {
    match cli.command {
        Command::Spectrum(a) => run_spectrum(&a),
        Command::Window(a) => run_window(&a),
        Command::Sweep(a) => run_sweep(&a),
        Command::Oracle(a) => run_oracle(&a),
        Command::Propagate(a) => run_propagate(&a),
    }
}

#[derive(Debug, Serialize)]
struct SpectrumSummary {
    command: &'static str,
    method: Method,
    parameters: ParameterSummary,
    points: usize,
    peak_abs_re_chi: f64,
    peak_im_chi: f64,
    peak_abs_im_chi: f64,
    undressed_peak_im_chi: f64,
    window: Option<WindowReport>,
}

pub fn run_spectrum(args: &SpectrumArgs) -> CliResult<Vec<PathBuf>> {
    let r = resolve(&args.common)?;
    let (sys, field) = (&r.sys, &r.field);
    let (method, spec) = match args.method {
        MethodArg::Closed => (Method::ClosedForm, SusceptibilitySpectrum::closed_form(sys, field)?),
        MethodArg::Quadrature => (
            Method::Quadrature,
            SusceptibilitySpectrum::quadrature(sys, field, &QuadratureSettings::default())?,
        ),
        MethodArg::Steady => (
            Method::SteadyState,
            SusceptibilitySpectrum::steady_state(sys, field, &SteadySettings::default())?,
        ),
    };
    let window = if field.eps2 > 0.0 {
        Some(find_window(&spec, sys, field, WINDOW_THRESHOLD)?)
    } else {
        None
    };
    let out = &args.common.out;
    prepare_out(out)?;
    let csv_path = out.join("spectrum.csv");
    fio::write_spectrum_csv(create(&csv_path)?, &fio::spectrum_rows(&spec, sys))?;
    let summary = SpectrumSummary {
        command: "spectrum",
        method,
        parameters: r.summary(),
        points: spec.len(),
        peak_abs_re_chi: spec.peak_abs_re(),
        peak_im_chi: spec.peak_im(),
        peak_abs_im_chi: spec.peak_abs_im(),
        undressed_peak_im_chi: undressed_peak(sys),
        window,
    };
    let json_path = out.join("summary.json");
    write_json(&json_path, &summary)?;
    Ok(vec![csv_path, json_path])
}

#[derive(Debug, Serialize)]
struct WindowOutput {
    command: &'static str,
    parameters: ParameterSummary,
    window: WindowReport,
}

pub fn run_window(args: &WindowArgs) -> CliResult<Vec<PathBuf>> {
    let r = resolve(&args.common)?;
    let spec = SusceptibilitySpectrum::closed_form(&r.sys, &r.field)?;
    let window = find_window(&spec, &r.sys, &r.field, args.threshold)?;
    let out = &args.common.out;
    prepare_out(out)?;
    let path = out.join("window.json");
    write_json(
        &path,
        &WindowOutput {
            command: "window",
            parameters: r.summary(),
            window,
        },
    )?;
    Ok(vec![path])
}

#[derive(Debug, Serialize)]
struct SweepRow {
    value: f64,
    status: &'static str,
    center_au: Option<f64>,
    center_detuning_au: Option<f64>,
    width_au: Option<f64>,
    width_over_gamma: Option<f64>,
    threshold_used: Option<f64>,
    n_g_center: Option<f64>,
    dispersion_slope: Option<f64>,
    fano_zero_au: Option<f64>,
    error: String,
}

#[derive(Debug, Serialize)]
struct SweepOutput {
    command: &'static str,
    parameters: ParameterSummary,
    values: Vec<f64>,
    failed_points: usize,
    fit: fano_eit::ScalingFit,
}

pub fn run_sweep(args: &SweepArgs) -> CliResult<Vec<PathBuf>> {
    let r = resolve(&args.common)?;
    let variable = match args.sweep_var {
        SweepVarArg::Eps2 => SweepVariable::Eps2,
        SweepVarArg::Q => SweepVariable::Q,
    };
    let mut values = args.sweep_values.clone();
    if values.len() < MIN_SWEEP_POINTS {
        return Err(invalid(
            "sweep_values",
            format!("need at least {MIN_SWEEP_POINTS} values, got {}", values.len()),
        ));
    }
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(invalid("sweep_values", "every value must be finite and > 0"));
    }
    values.sort_by(f64::total_cmp);
    values.dedup();
    let points = sweep_windows(&r.sys, &r.field, variable, &values);

    let mut rows = Vec::with_capacity(points.len());
    let mut widths = Vec::new();
    for p in &points {
        rows.push(match &p.report {
            Ok(w) => {
                widths.push((p.value, w.width));
                SweepRow {
                    value: p.value,
                    status: "ok",
                    center_au: Some(w.center),
                    center_detuning_au: Some(w.center_detuning_au),
                    width_au: Some(w.width),
                    width_over_gamma: Some(w.width_over_gamma),
                    threshold_used: Some(w.threshold_used),
                    n_g_center: Some(w.n_g_center),
                    dispersion_slope: Some(w.dispersion_slope),
                    fano_zero_au: w.fano_zero,
                    error: String::new(),
                }
            }
            Err(e) => SweepRow {
                value: p.value,
                status: "failed",
                center_au: None,
                center_detuning_au: None,
                width_au: None,
                width_over_gamma: None,
                threshold_used: None,
                n_g_center: None,
                dispersion_slope: None,
                fano_zero_au: None,
                error: e.to_string(),
            },
        });
    }
    let out = &args.common.out;
    prepare_out(out)?;
    let csv_path = out.join("sweep_points.csv");
    fio::write_rows(create(&csv_path)?, &rows)?;

    let failed = points.len() - widths.len();
    if widths.len() < MIN_SWEEP_POINTS {
        return Err(CliError::Failed(format!(
            "only {} of {} sweep points produced a window (need {MIN_SWEEP_POINTS}); see {}",
            widths.len(),
            points.len(),
            csv_path.display()
        )));
    }
    let fit = fit_scaling(variable, &widths, r.sys.gamma).map_err(|e| match e {
        Error::InvalidParameter { reason, .. } => CliError::Failed(reason),
        other => CliError::Core(other),
    })?;
    let json_path = out.join("sweep_fit.json");
    write_json(
        &json_path,
        &SweepOutput {
            command: "sweep",
            parameters: r.summary(),
            values,
            failed_points: failed,
            fit,
        },
    )?;
    Ok(vec![csv_path, json_path])
}

#[derive(Debug, Serialize)]
struct OracleOutput {
    command: &'static str,
    parameters: ParameterSummary,
    quadrature_tolerance: f64,
    steady_tolerance: f64,
    pass: bool,
    #[serde(flatten)]
    report: EquivalenceReport,
}

pub fn run_oracle(args: &OracleArgs) -> CliResult<Vec<PathBuf>> {
    let r = resolve(&args.common)?;
    let (sys, field) = (&r.sys, &r.field);
    let quad_tol = args.quadrature_tol_override.unwrap_or(QUADRATURE_TOL);
    let report = equivalence_report(sys, field, &sample_probes(sys, field))?;
    let pass = report.passes(quad_tol, STEADY_TOL);
    let summary = format!(
        "quadrature {:e} / {:e} (tol {quad_tol:e}), steady {:e} (tol {STEADY_TOL:e})",
        report.max_rel_dev_whole_line, report.max_rel_dev_threshold, report.max_steady_dev_over_peak
    );

    let out = &args.common.out;
    prepare_out(out)?;
    let path = out.join("oracle.json");
    write_json(
        &path,
        &OracleOutput {
            command: "oracle",
            parameters: r.summary(),
            quadrature_tolerance: quad_tol,
            steady_tolerance: STEADY_TOL,
            pass,
            report,
        },
    )?;
    if !pass {
        return Err(CliError::Failed(format!("oracle mismatch: {summary}; see {}", path.display())));
    }
    Ok(vec![path])
}

#[derive(Debug, Serialize)]
struct PropagationOutput {
    command: &'static str,
    parameters: ParameterSummary,
    length_cm: f64,
    pulse_fwhm_ns: f64,
    pulse_spectral_fwhm_au: f64,
    window_width_au: Option<f64>,
    n_g_center: f64,
    delay_au: f64,
    delay_ns: f64,
    predicted_delay_au: f64,
    delay_ratio: Option<f64>,
    transmitted_energy_fraction: f64,
}

pub fn run_propagate(args: &PropagateArgs) -> CliResult<Vec<PathBuf>> {
    let r = resolve(&args.common)?;
    let (sys, field) = (&r.sys, &r.field);
    let units = UnitContext::CODATA2018;
    if !(args.length_cm >= 0.0 && args.length_cm.is_finite()) {
        return Err(invalid("length_cm", "must be finite and >= 0"));
    }
    let length = units.cm_to_bohr(args.length_cm);
    let window = if field.eps2 > 0.0 {
        let spec = SusceptibilitySpectrum::closed_form(sys, field)?;
        Some(find_window(&spec, sys, field, WINDOW_THRESHOLD)?)
    } else {
        None
    };
    let carrier = field.dark_probe(sys);
    let pulse = match (args.pulse_fwhm_ns, &window) {
        (Some(ns), _) => {
            if !(ns > 0.0 && ns.is_finite()) {
                return Err(invalid("pulse_fwhm_ns", "must be finite and > 0"));
            }
            ProbePulse::gaussian(carrier, units.ns_to_au_time(ns), PULSE_SAMPLES, PULSE_SPAN_FWHM)?
        }
        (None, Some(w)) => ProbePulse::gaussian_with_bandwidth(
            carrier,
            PULSE_BANDWIDTH_FRACTION * w.width,
            PULSE_SAMPLES,
            PULSE_SPAN_FWHM,
        )?,
        (None, None) => return Err(invalid("pulse_fwhm_ns", "required when the control field is off")),
    };
    if let Some(w) = &window {
        pulse.check_narrowband(w.width)?;
    }
    let result = propagate(&pulse, sys, field, length)?;
    let predicted = delay_prediction(sys, field, length)?;
    let n_g = group_index(carrier, sys, field, DerivativeMode::Analytic)?;

    let out = &args.common.out;
    prepare_out(out)?;
    let times = pulse.times();
    let in_path = out.join("pulse_in.csv");
    let out_path = out.join("pulse_out.csv");
    fio::write_rows::<_, PulseRow>(create(&in_path)?, &fio::pulse_rows(&times, &pulse.samples))?;
    fio::write_rows::<_, PulseRow>(create(&out_path)?, &fio::pulse_rows(&times, &result.output_samples))?;
    let json_path = out.join("propagation.json");
    write_json(
        &json_path,
        &PropagationOutput {
            command: "propagate",
            parameters: r.summary(),
            length_cm: args.length_cm,
            pulse_fwhm_ns: units.au_time_to_ns(pulse.envelope_fwhm_time),
            pulse_spectral_fwhm_au: pulse.spectral_fwhm(),
            window_width_au: window.as_ref().map(|w| w.width),
            n_g_center: n_g,
            delay_au: result.delay,
            delay_ns: units.au_time_to_ns(result.delay),
            predicted_delay_au: predicted,
            delay_ratio: (predicted != 0.0).then(|| result.delay / predicted),
            transmitted_energy_fraction: result.transmitted_energy_fraction,
        },
    )?;
    Ok(vec![in_path, out_path, json_path])
}
