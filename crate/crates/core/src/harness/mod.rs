//! Experiment configuration, Monte Carlo measurement, property checks and
//! CSV output.

pub mod config;
pub mod experiment;
pub mod properties;
pub mod sample;
pub mod schema;
pub mod setup;
pub mod verify;

pub use config::{ExperimentConfig, PlanConfig, PsiChoice, SchemeConfig, VerifyConfig};
pub use experiment::{
    error_curve, measure_cells, measure_error, write_error_curve, CurveRow, ErrorCurve, ErrorEstimate,
};
pub use properties::Check;
pub use setup::Setup;
pub use verify::{verify_all, Report};
