//! Independent numerical checks of the closed-form susceptibility.
//!
//! [`pv`] integrates the continuum integral directly with the +iη
//! prescription handled analytically; [`steady`] replaces the continuum by a
//! finite set of bins and solves the stationary density-matrix equations.

pub mod compare;
pub mod pv;
pub mod steady;

pub use compare::{equivalence_report, sample_probes, EquivalenceReport, OracleSample};
pub use pv::{chi_quadrature, continuum_integral, r_quadrature, LowerLimit, QuadratureSettings};
pub use steady::{
    auto_binset, build_binset, chi_from_state, chi_steady, chi_steady_many, chi_steady_extrapolated, convergence_table,
    stationary_solve, stationary_solve_dense, BinSet, ConvergenceRow, StationaryState, SteadySettings,
};
