use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate input: susceptibility denominator vanishes at detuning {detuning:e} a.u.")]
    Degenerate { detuning: f64 },

    #[error("quadrature did not converge: error estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    QuadratureNonConvergence { estimate: f64, tolerance: f64 },

    #[error(
        "pole at {pole:e} a.u. lies within {halfwidth:e} a.u. of the lower limit {lower:e} a.u. (threshold regime)"
    )]
    ThresholdRegime { pole: f64, lower: f64, halfwidth: f64 },

    #[error("infeasible bin set: resolution requires at least {required} bins, got {given}")]
    InfeasibleBins { required: usize, given: usize },

    #[error("singular stationary system at detuning {detuning:e} a.u.")]
    SingularSystem { detuning: f64 },

    #[error("finite-difference step {step:e} underflows at detuning {detuning:e} a.u.")]
    StepUnderflow { step: f64, detuning: f64 },

    #[error(
        "unresolved window: only {interior_points} grid points inside a window of width {width:e} a.u.; \
         use a grid spanning about ±{needed_halfwidth:e} a.u. around the center with spacing below {needed_spacing:e} a.u."
    )]
    UnresolvedWindow {
        interior_points: usize,
        width: f64,
        needed_halfwidth: f64,
        needed_spacing: f64,
    },

    #[error("pulse spectrum reaches detuning {detuning:e} a.u., outside the susceptibility grid [{lo:e}, {hi:e}]")]
    SpectralSupport { detuning: f64, lo: f64, hi: f64 },

    #[error("no transparency window at detuning {detuning:e} a.u.: absorption is not suppressed there")]
    NoWindow { detuning: f64 },

    #[error("sweep point {value:e} failed: {source}")]
    SweepPoint {
        value: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by the caller's input rather than by numerics.
    pub fn is_invalid_input(&self) -> bool {
        match self {
            Error::InvalidParameter { .. }
            | Error::ThresholdRegime { .. }
            | Error::InfeasibleBins { .. }
            | Error::SpectralSupport { .. }
            | Error::Parse { .. } => true,
            Error::SweepPoint { source, .. } => source.is_invalid_input(),
            _ => false,
        }
    }
}
