//! Numerical core for a family of four-dimensional SDEs whose strong
//! approximation error decays arbitrarily slowly.
//!
//! The pieces are the coefficient family and its constants ([`coeffs`]), the
//! glued growth function `psi` ([`psi`]), Brownian paths and the exact
//! solution ([`brownian`]), the conditional law given point observations
//! ([`bridge`]), adaptive approximation schemes ([`schemes`]), closed-form
//! lower bounds ([`bounds`]) and the Monte Carlo experiment runner
//! ([`harness`]).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod bridge;
pub mod brownian;
pub mod coeffs;
pub mod error;
pub mod harness;
pub mod psi;
pub mod quad;
pub mod rng;
pub mod schemes;
pub mod stats;

pub use bounds::{cor3_bound, sine_moment, sine_moment_bound, thm1_bound, BoundCurve, BoundPoint};
pub use bridge::{conditional_cov, conditional_mean, sample_conditional, ObservationSet};
pub use brownian::{exact_solution, refine_path, sample_path, BrownianPath, PathSegment, SolutionVec};
pub use coeffs::{
    derived_constants, make_coeffs, CoefficientParams, CoefficientSet, DerivedConstants, SmoothFn, Support,
};
pub use error::{Error, Result};
pub use harness::{error_curve, measure_error, verify_all, ExperimentConfig, Report, Setup};
pub use psi::{compute_knots, compute_n0, psi_eval, psi_inv, PlanVars, Psi, PsiSpec, RatePlan};
pub use schemes::{
    run_scheme, AdaptiveScheme, Estimator, EulerEquidistant, FixedSites, GapRefiner, Problem, RunRecord, RunSettings,
};
