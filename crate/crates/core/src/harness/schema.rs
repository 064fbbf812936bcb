//! Column documentation for every CSV the harness writes.

use std::path::Path;

use serde_json::{json, Map, Value};

use crate::error::Result;

pub type Columns = &'static [(&'static str, &'static str)];

pub const ERROR_CURVE: Columns = &[
    ("N", "evaluation budget in (0, delta)"),
    ("scheme", "scheme family"),
    (
        "mean_abs_error",
        "Monte Carlo mean of the Euclidean error at T over all four coordinates",
    ),
    (
        "std_error",
        "sample standard deviation of the error divided by sqrt(num_paths)",
    ),
    (
        "measured_cost",
        "Monte Carlo mean of the number of evaluations in (0, delta)",
    ),
    (
        "thm1_bound",
        "lower bound max(0, c1 exp(-psi^-1(D_N)^2/beta) - c2/N); empty if psi is not invertible",
    ),
    (
        "cor3_bound",
        "kappa a_N with kappa = a_N0/a_1; empty outside the plan prefix",
    ),
];

pub const ERROR_BREAKDOWN: Columns = &[
    ("N", "evaluation budget in (0, delta)"),
    ("scheme", "scheme family"),
    ("delta", "length of the evaluation window"),
    ("num_paths", "Monte Carlo sample size"),
    ("x1_mean_abs_error", "mean |x1 error|"),
    ("x1_std_error", "standard error of the x1 column"),
    ("x2_mean_abs_error", "mean |x2 error|"),
    ("x2_std_error", "standard error of the x2 column"),
    ("x3_mean_abs_error", "mean |x3 error|"),
    ("x3_std_error", "standard error of the x3 column"),
    ("x4_mean_abs_error", "mean |x4 error|"),
    ("x4_std_error", "standard error of the x4 column"),
    ("cost_std_error", "standard error of the measured cost"),
    ("thm1_raw", "unclamped lower bound, may be negative"),
    ("thm1_bound", "clamped lower bound"),
    (
        "admitted",
        "measured_cost <= N; refused rows are absent from error_curve.csv",
    ),
];

pub const BOUND_CURVE: Columns = &[
    ("N", "evaluation budget"),
    ("raw_bound", "c1 exp(-psi^-1(D_N)^2/beta) - c2/N"),
    ("clamped_bound", "max(0, raw_bound)"),
    ("D_N", "(1 + sqrt(96/(alpha min(delta, tau1/2)^3))) N^3"),
    ("psi_inv_DN", "psi^-1(D_N)"),
    (
        "extrapolated_flag",
        "true when psi^-1 used the extension beyond the last knot",
    ),
];

pub const PATHS: Columns = &[
    ("path_index", "master path index"),
    ("t", "time"),
    ("w", "Brownian value"),
];

pub const SOLUTIONS: Columns = &[
    ("path_index", "master path index"),
    ("x1", "exact x1 at T"),
    ("x2", "exact x2 at T"),
    ("x3", "exact x3 at T"),
    ("x4", "exact x4 at T"),
];

pub const RUNS: Columns = &[
    ("scheme", "scheme family"),
    ("N", "evaluation budget"),
    ("path_index", "master path index"),
    ("nu", "number of evaluations in (0, delta)"),
    ("x1", "estimated x1"),
    ("x2", "estimated x2"),
    ("x3", "estimated x3"),
    ("x4", "estimated x4"),
    ("err", "Euclidean error against the oracle"),
];

pub const KNOTS: Columns = &[
    ("N", "knot index"),
    ("b_N", "knot abscissa psi^-1(d_N)"),
    ("d_N", "knot value D_N"),
];

pub const TABLES: &[(&str, Columns)] = &[
    ("error_curve.csv", ERROR_CURVE),
    ("error_breakdown.csv", ERROR_BREAKDOWN),
    ("bound_curve.csv", BOUND_CURVE),
    ("paths.csv", PATHS),
    ("solutions.csv", SOLUTIONS),
    ("runs.csv", RUNS),
    ("knots.csv", KNOTS),
];

pub fn schema_json() -> Value {
    let mut tables = Map::new();
    for (file, cols) in TABLES {
        let cols: Vec<Value> = cols.iter().map(|(n, d)| json!({"name": n, "description": d})).collect();
        tables.insert((*file).to_string(), Value::Array(cols));
    }
    json!({ "format": "csv, header row, comma separated", "tables": tables })
}

pub fn write_schema(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("schema.json"), serde_json::to_string_pretty(&schema_json())?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_curve_has_seven_columns() {
        assert_eq!(ERROR_CURVE.len(), 7);
        let v = schema_json();
        assert_eq!(v["tables"]["bound_curve.csv"].as_array().unwrap().len(), 6);
    }
}
