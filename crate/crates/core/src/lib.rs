//! Robust estimation for linear regression and AR(d) time series under
//! sparse adversarial corruptions.
//!
//! The estimators cast "which responses are corrupted" as a sparse recovery
//! problem and solve it by projected iterative hard thresholding:
//!
//! * [`crr::solve_crr`] - robust linear regression (pointwise thresholding);
//! * [`ar::solve_crtse`] - robust AR(d) estimation under additive outliers
//!   (clipping preprocessing + group thresholding over aligned blocks);
//! * [`ar::solve_ioard`] - robust AR(d) estimation under innovational
//!   outliers (pointwise thresholding on the lagged design).
//!
//! [`datagen`] draws seeded synthetic instances for both problem families,
//! [`spectral`] computes the AR spectral constants that govern the
//! time-series theory, and [`diagnostics`] holds the oracles the estimators
//! are tested against: exact subset-convexity constants, brute-force trimmed
//! least squares, and two independent routes to the truncated-moment
//! identity.

pub mod ar;
pub mod crr;
pub mod datagen;
pub mod diagnostics;
pub mod error;
pub mod fileio;
pub mod problem;
pub mod rng;
pub mod spectral;
pub mod thresholding;

pub use error::{Error, Result};
pub use problem::{
    ols, projector, ClipPolicy, DiagnosticTrace, Estimate, GroundTruthReg, Projector,
    RegressionProblem, SolverConfig, Termination, TraceRow,
};
