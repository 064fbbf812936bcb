use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::harness::config::ExperimentConfig;
use crate::harness::experiment::error_curve;
use crate::harness::properties::{self as props, Check};
use crate::harness::setup::Setup;

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// One line per check.
    pub fn table(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&format!(
                "{:<4} {:<36} measured {:>12.5e}  threshold {:>12.5e}  {}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.measured,
                c.threshold,
                c.detail
            ));
        }
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("verify.json"), serde_json::to_string_pretty(self)?)?;
        std::fs::write(dir.join("verify.txt"), self.table())?;
        Ok(())
    }
}

/// Runs every property suite. Config errors surface before any suite runs.
pub fn verify_all(config: &ExperimentConfig, workers: usize) -> Result<Report> {
    let setup = Setup::new(config)?;
    let v = &config.verify;
    let seed = config.master_seed;
    let t_end = setup.cs.t_end();
    let mut checks = Vec::new();

    log::info!("verify: constants and bounds");
    checks.push(props::self_consistency(&setup));
    checks.push(props::sine_moment_sweep(config.quad_tol.min(1e-9)));
    checks.push(props::bridge_variance_identity());
    checks.push(props::bound_below_c1(&setup));
    checks.extend(props::bridge_variance_lower_bound(
        &setup.cs,
        &setup.consts,
        config.quad_tol,
    ));
    checks.push(props::gap_sum_lower_bound(&setup.cs, &setup.consts, seed));

    log::info!("verify: psi");
    if let Some(spec) = setup.glued() {
        checks.extend(props::psi_suite(spec, &setup.psi_consts, &setup, v.psi_pairs, seed));
    }

    log::info!("verify: Brownian and bridge laws");
    checks.push(props::ito_parts_crosscheck(&setup, v.fine_paths));
    checks.push(props::bridge_independence(seed, t_end, v.samples));
    checks.extend(props::bridge_symmetry(seed, t_end, v.samples));
    checks.push(props::conditional_covariance(seed, t_end, v.samples));
    checks.push(props::tower_consistency(seed, t_end, v.samples));
    checks.extend(props::ito_isometry(&setup, v.samples, v.coarse_grid_exp));

    log::info!("verify: solvers");
    checks.push(props::oracle_equivalence(&setup, v.solver_paths));
    checks.push(props::euler_sanity(&setup, config.num_paths));
    let n_first = setup.n_list()?.first().copied().unwrap_or(1);
    checks.push(props::path_consistency(&setup, n_first));
    checks.push(props::reproducibility(&setup, v.repro_paths));

    if v.dominance {
        log::info!("verify: error curve");
        checks.push(props::conditional_vs_euler(&setup, n_first, config.num_paths, workers));
        let curve = error_curve(&setup, workers)?;
        checks.extend(props::dominance(&setup, &curve));
    }
    Ok(Report { checks })
}
