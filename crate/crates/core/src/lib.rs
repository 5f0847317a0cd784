//! Phase retrieval for signals in a known union of subspaces.
//!
//! A signal `x*` lies in one of `R` known `d`-dimensional subspaces of `ℝⁿ`
//! and is observed only through amplitudes `y = |A x*|` of Gaussian
//! measurements. Recovery runs in two stages:
//!
//! 1. [`init::spectral_init`] scores every subspace with a weighted spectral
//!    estimate and starts from the best one;
//! 2. [`descent::am_descent`] alternates the closed-form phase update
//!    `p = sign(A x)` with an exact least-squares fit over the union.
//!
//! [`oracle`] holds brute-force and isometry checks used to validate the
//! solver, and [`experiment`] runs the Monte Carlo success-rate sweeps.

pub mod descent;
pub mod error;
pub mod experiment;
pub mod init;
pub mod linalg;
pub mod model;
pub mod operators;
pub mod oracle;

pub use descent::{
    am_descent, am_descent_with, loss, phase_noise, relative_error, sign_step, uos_least_squares,
    DescentConfig, IterateRecord, PhaseVector, RecoveryReport,
};
pub use error::{Error, Result};
pub use experiment::{
    run_monte_carlo, run_trial, ExperimentConfig, GridCell, SuccessGrid, TrialOutcome,
};
pub use init::{spectral_candidate, spectral_init, SpectralCandidate};
pub use linalg::Matrix;
pub use model::{
    generate_union, measure, signed_distance, synthesize_signal, GroundTruth,
    MeasurementEnsemble, SignalEstimate, UnionOfSubspaces,
};
pub use operators::{SubspaceOperators, UnionFit};
pub use oracle::{empirical_rip, exhaustive_phase_oracle, OracleResult, RipEstimate};
