use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coeffs::CoefficientParams;
use crate::error::{Error, Result};

/// Target sequences as expressions in `N` (and `T`, `tau1`, `tau2`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanConfig {
    pub a: String,
    pub delta: String,
    pub prefix_len: usize,
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig {
            a: "1/ln(N+1)".into(),
            delta: "min(1, 2/N)*tau1/2".into(),
            prefix_len: 64,
        }
    }
}

/// Which `psi` drives the SDE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PsiChoice {
    /// Glued from the plan.
    Glued,
    Constant {
        value: f64,
    },
    Affine {
        slope: f64,
        intercept: f64,
    },
    /// A pinned knot table in JSON.
    File {
        path: PathBuf,
    },
}

/// A scheme family; its size parameter is derived from each `N`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case", deny_unknown_fields)]
pub enum SchemeConfig {
    /// Equidistant Euler with `floor(N T / delta)` steps.
    Euler,
    /// Gap bisection with budget `N`.
    GapRefiner,
    /// `N` equidistant sites, conditional mean.
    CondMean {
        #[serde(default = "default_inner_mc")]
        inner_mc: usize,
    },
    /// `N` equidistant sites, conditional median.
    CondMedian {
        #[serde(default = "default_inner_mc")]
        inner_mc: usize,
    },
    /// `N` equidistant sites, Euler on the induced grid.
    FixedEuler,
}

fn default_inner_mc() -> usize {
    64
}

impl SchemeConfig {
    pub fn label(&self) -> &'static str {
        match self {
            SchemeConfig::Euler => "euler_equidistant",
            SchemeConfig::GapRefiner => "adaptive_gap_refiner",
            SchemeConfig::CondMean { .. } => "conditional_mean_estimator",
            SchemeConfig::CondMedian { .. } => "conditional_median_estimator",
            SchemeConfig::FixedEuler => "fixed_sites_euler",
        }
    }
}

/// Controlled corruption of the constants used to build `psi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Perturbation {
    pub beta_factor: f64,
}

impl Default for Perturbation {
    fn default() -> Self {
        Perturbation { beta_factor: 1.0 }
    }
}

/// Sample sizes of the property suites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Draws for the distributional checks.
    pub samples: usize,
    /// Paths for the fine-grid cross-checks.
    pub fine_paths: usize,
    /// Paths for the solver convergence checks.
    pub solver_paths: usize,
    /// Grid exponent for the distributional checks.
    pub coarse_grid_exp: u32,
    /// Random pairs for the `psi` suite.
    pub psi_pairs: usize,
    /// Paths per run in the in-process reproducibility check.
    pub repro_paths: usize,
    /// Run the Monte Carlo dominance experiment.
    pub dominance: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            samples: 100_000,
            fine_paths: 100,
            solver_paths: 1_000,
            coarse_grid_exp: 12,
            psi_pairs: 100_000,
            repro_paths: 64,
            dominance: true,
        }
    }
}

/// A complete experiment. Every field has a default; the effective config
/// is echoed next to the results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub num_paths: usize,
    /// The oracle grid has `2^fine_grid_exp` steps on `[0, T]`.
    pub fine_grid_exp: u32,
    /// The tail grid has `2^tail_grid_exp` points on `[delta, T]`.
    pub tail_grid_exp: u32,
    pub coefficients: CoefficientParams,
    pub quad_tol: f64,
    pub plan: PlanConfig,
    pub psi: PsiChoice,
    pub schemes: Vec<SchemeConfig>,
    /// Defaults to `N0..=N0+8`.
    pub n_list: Option<Vec<usize>>,
    /// Fixed `delta` for every `N`; defaults to the plan's `delta_N`.
    pub delta: Option<f64>,
    pub nu_cap: usize,
    pub output_dir: PathBuf,
    /// Paths written by `sample`.
    pub sample_paths: usize,
    pub perturb: Perturbation,
    pub verify: VerifyConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            master_seed: 0x5DEB_0B0D,
            num_paths: 10_000,
            fine_grid_exp: 16,
            tail_grid_exp: 12,
            coefficients: CoefficientParams::default(),
            quad_tol: 1e-10,
            plan: PlanConfig::default(),
            psi: PsiChoice::Glued,
            schemes: vec![
                SchemeConfig::Euler,
                SchemeConfig::GapRefiner,
                SchemeConfig::CondMean { inner_mc: 64 },
            ],
            n_list: None,
            delta: None,
            nu_cap: 100_000,
            output_dir: PathBuf::from("out"),
            sample_paths: 4,
            perturb: Perturbation::default(),
            verify: VerifyConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        ExperimentConfig::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.coefficients.validate()?;
        if self.num_paths == 0 {
            return Err(Error::invalid("num_paths", "must be at least 1"));
        }
        if self.fine_grid_exp < self.tail_grid_exp {
            return Err(Error::invalid("fine_grid_exp", "must be at least tail_grid_exp"));
        }
        if self.fine_grid_exp > 24 || self.tail_grid_exp < 1 {
            return Err(Error::invalid(
                "grid exponents",
                "need 1 <= tail_grid_exp <= fine_grid_exp <= 24",
            ));
        }
        if !(self.quad_tol > 0.0) {
            return Err(Error::invalid("quad_tol", "must be positive"));
        }
        if self.plan.prefix_len == 0 {
            return Err(Error::invalid("plan.prefix_len", "must be at least 1"));
        }
        if self.nu_cap == 0 {
            return Err(Error::invalid("nu_cap", "must be at least 1"));
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < self.coefficients.t_end) {
                return Err(Error::invalid("delta", "must lie in (0, T)"));
            }
        }
        if let Some(ns) = &self.n_list {
            if ns.contains(&0) {
                return Err(Error::invalid("n_list", "entries must be at least 1"));
            }
        }
        for s in &self.schemes {
            if let SchemeConfig::CondMean { inner_mc } | SchemeConfig::CondMedian { inner_mc } = s {
                if *inner_mc == 0 {
                    return Err(Error::invalid("inner_mc", "must be at least 1"));
                }
            }
        }
        if !(self.perturb.beta_factor > 0.0 && self.perturb.beta_factor.is_finite()) {
            return Err(Error::invalid("perturb.beta_factor", "must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = ExperimentConfig::default();
        let back = ExperimentConfig::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
        let partial = ExperimentConfig::from_json(r#"{"num_paths": 3, "schemes": [{"scheme": "cond_mean"}]}"#).unwrap();
        assert_eq!(partial.num_paths, 3);
        assert_eq!(partial.schemes, vec![SchemeConfig::CondMean { inner_mc: 64 }]);
    }

    #[test]
    fn validation_catches_bad_input() {
        let bad = r#"{"coefficients": {"tau1": 0.6, "tau2": 0.5}}"#;
        assert!(ExperimentConfig::from_json(bad).is_err());
        assert!(ExperimentConfig::from_json(r#"{"num_paths": 0}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"fine_grid_exp": 8, "tail_grid_exp": 10}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"bogus": 1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"quad_tol": -1}"#).is_err());
    }
}
