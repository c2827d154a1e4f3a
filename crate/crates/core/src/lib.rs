#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Simulation of cold atoms reflecting from a periodically magnetized
//! stripe mirror: field models, adaptive single-atom dynamics, Monte Carlo
//! ensembles and a specularity analysis of the mean lateral motion.

pub mod analysis;
pub mod constants;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod field;
pub mod integrator;
pub mod io;
pub mod potential;
pub mod validation;

pub use analysis::{
    default_post_window, detect_apexes, detect_bounces, fit_expansion, ideal_bounce_trajectory,
    mean_height_deviation, specularity_test, ExpansionFit, SpecularityOptions, SpecularityReport,
    Verdict, WindowLabel,
};
pub use constants::{PhysicalConstants, PHYSICAL};
pub use dynamics::{
    adiabaticity_margin, analytic_exp_bounce, harmonic_ratio_at_turning, interaction_time,
    max_reflect_height, propagate, propagate_with, turning_point, BounceEvent, PropagateOptions,
    State, Termination, Trajectory,
};
pub use ensemble::{
    run_ensemble, sample_initial, uniform_times, AtomRecord, CloudTimeSeries, EnsembleOptions,
    EnsembleRun, EnsembleSpec, Snapshot,
};
pub use error::{AnalysisError, CsvError, DynamicsError, EnsembleError, FieldError};
pub use field::{
    duty_factor, field_direction_angle, harmonic_amplitude, field_exact, FieldVector, HarmonicCoefficients,
    MirrorSpec, StripeCount,
};
pub use potential::{force, potential_energy, AtomSpecies, MirrorField, PotentialModel};
pub use validation::{run_validation, run_validation_with, CheckResult};
