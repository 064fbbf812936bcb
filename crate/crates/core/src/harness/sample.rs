use std::path::Path;

use crate::brownian::{uniform_grid, ExactEvaluator};
use crate::error::Result;
use crate::harness::experiment::master_path;
use crate::harness::schema;
use crate::harness::setup::Setup;
use crate::rng::{stream, Lane};
use crate::schemes::run_scheme_with;

/// Paths written to `paths.csv` are thinned to this many steps.
pub const PATH_CSV_STEPS: usize = 1 << 10;

/// Writes `config.sample_paths` master paths, their exact solutions and one
/// run of every configured scheme at the first `N` of the curve.
pub fn write_samples(setup: &Setup, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let cfg = &setup.config;
    let steps = 1usize << cfg.fine_grid_exp;
    let grid = uniform_grid(setup.cs.t_end(), steps);
    let oracle = ExactEvaluator::new(&setup.cs, &grid)?;
    let n = setup.n_list()?.first().copied().unwrap_or(1);
    let delta = setup.delta_for(n)?;
    let schemes = cfg
        .schemes
        .iter()
        .map(|sc| setup.build_scheme(sc, n, delta).map(|s| (sc.label(), s)))
        .collect::<Result<Vec<_>>>()?;

    let mut paths = csv::Writer::from_path(dir.join("paths.csv"))?;
    let mut sols = csv::Writer::from_path(dir.join("solutions.csv"))?;
    let mut runs = csv::Writer::from_path(dir.join("runs.csv"))?;
    paths.write_record(schema::PATHS.iter().map(|c| c.0))?;
    sols.write_record(schema::SOLUTIONS.iter().map(|c| c.0))?;
    runs.write_record(schema::RUNS.iter().map(|c| c.0))?;
    let stride = (steps / PATH_CSV_STEPS).max(1);
    for i in 0..cfg.sample_paths as u64 {
        let p = master_path(cfg.master_seed, &grid, i)?;
        let thin = p.subsample(stride);
        for (t, w) in thin.times().iter().zip(thin.values()) {
            paths.write_record([i.to_string(), t.to_string(), w.to_string()])?;
        }
        let x = oracle.solve(&setup.psi, &p);
        let a = x.as_array();
        sols.write_record([
            i.to_string(),
            a[0].to_string(),
            a[1].to_string(),
            a[2].to_string(),
            a[3].to_string(),
        ])?;
        for (k, (label, s)) in schemes.iter().enumerate() {
            let tag = [k as u64, n as u64, delta.to_bits()];
            let rec = run_scheme_with(
                s.as_ref(),
                &setup.settings(delta),
                &p,
                stream(cfg.master_seed, Lane::Refinement, &tag, i),
                &mut stream(cfg.master_seed, Lane::InnerMonteCarlo, &tag, i),
            )?;
            let e = rec.estimate.as_array();
            runs.write_record([
                label.to_string(),
                n.to_string(),
                i.to_string(),
                rec.nu.to_string(),
                e[0].to_string(),
                e[1].to_string(),
                e[2].to_string(),
                e[3].to_string(),
                rec.estimate.dist(&x).to_string(),
            ])?;
        }
    }
    paths.flush()?;
    sols.flush()?;
    runs.flush()?;
    schema::write_schema(dir)?;
    std::fs::write(dir.join("config.json"), cfg.to_json()?)?;
    Ok(())
}
