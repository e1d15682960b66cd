//! Probe susceptibility of an atomic medium in a Λ-like configuration whose
//! upper level is a continuum structured by an autoionizing state.
//!
//! The closed form lives in [`susceptibility`]; [`oracle`] holds two
//! independent numerical routes to the same quantity (principal-value
//! quadrature and a discretized-continuum stationary solve). [`analysis`]
//! extracts transparency windows and group indices, and [`propagation`]
//! turns the dispersion into a pulse delay. All quantities are in atomic
//! units unless a name says otherwise.

pub mod analysis;
pub mod error;
pub mod io;
pub mod oracle;
pub mod params;
pub mod propagation;
pub mod quadrature;
pub mod susceptibility;
pub mod units;

pub use analysis::{find_window, ScalingFit, SweepVariable, WindowReport};
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use params::{AtomicSystem, ContinuumShape, FieldConfig, Level, Preset, Probe, ProbeGrid};
pub use propagation::{ProbePulse, PropagationResult};
pub use susceptibility::{chi, group_index, r_closed, DerivativeMode, Method, SusceptibilitySpectrum};
pub use units::UnitContext;
