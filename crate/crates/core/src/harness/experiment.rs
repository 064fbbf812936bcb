use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{cor3_bound, thm1_bound_detail, BoundPoint};
use crate::brownian::{sample_path_with, uniform_grid, BrownianPath, ExactEvaluator};
use crate::error::{Error, Result};
use crate::harness::schema;
use crate::harness::setup::Setup;
use crate::rng::{stream, Lane};
use crate::schemes::{run_scheme_with, AdaptiveScheme, RunSettings};
use crate::stats::{mean_se, MeanSe};

/// Monte Carlo estimate of `E|X(T) - X̂|` and `E[nu]` for one scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorEstimate {
    pub mean_abs_error: f64,
    pub std_error: f64,
    pub num_paths: usize,
    pub measured_cost: f64,
    pub cost_se: f64,
    /// Mean absolute error of each coordinate.
    pub coords: [MeanSe; 4],
}

/// One scheme at one `(N, delta)`.
pub struct Cell {
    pub label: String,
    pub n: usize,
    pub delta: f64,
    pub scheme: Box<dyn AdaptiveScheme>,
    pub settings: RunSettings,
    /// Distinguishes the random streams of different cells.
    pub tag: [u64; 3],
}

/// Master path `index` on `grid`.
pub fn master_path(seed: u64, grid: &[f64], index: u64) -> Result<BrownianPath> {
    sample_path_with(grid, &mut stream(seed, Lane::MasterPath, &[], index))
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if workers > 0 {
        b = b.num_threads(workers);
    }
    b.build().map_err(|e| Error::invalid("workers", e.to_string()))
}

/// Runs every cell on the same `num_paths` master paths on the oracle grid
/// (common random numbers). Paths are distributed over `workers` threads;
/// per-path results are reduced in path order, so the output does not
/// depend on the worker count.
pub fn measure_cells(setup: &Setup, cells: &[Cell], num_paths: usize, workers: usize) -> Result<Vec<ErrorEstimate>> {
    let cfg = &setup.config;
    let grid = uniform_grid(setup.cs.t_end(), 1usize << cfg.fine_grid_exp);
    let oracle = ExactEvaluator::new(&setup.cs, &grid)?;
    let per_path = |i: usize| -> Result<Vec<[f64; 6]>> {
        let path = master_path(cfg.master_seed, &grid, i as u64)?;
        let exact = oracle.solve(&setup.psi, &path);
        if !exact.is_finite() {
            return Err(Error::NonFinite(format!("oracle on path {i}")));
        }
        cells
            .iter()
            .map(|c| {
                let refine = stream(cfg.master_seed, Lane::Refinement, &c.tag, i as u64);
                let mut inner = stream(cfg.master_seed, Lane::InnerMonteCarlo, &c.tag, i as u64);
                let rec = run_scheme_with(c.scheme.as_ref(), &c.settings, &path, refine, &mut inner)?;
                let d = rec.estimate.abs_diff(&exact);
                Ok([rec.estimate.dist(&exact), d[0], d[1], d[2], d[3], rec.nu as f64])
            })
            .collect()
    };
    let rows: Vec<Vec<[f64; 6]>> =
        pool(workers)?.install(|| (0..num_paths).into_par_iter().map(per_path).collect::<Result<_>>())?;
    Ok((0..cells.len())
        .map(|k| {
            let col = |j: usize| rows.iter().map(|r| r[k][j]).collect::<Vec<f64>>();
            let err = mean_se(&col(0));
            let nu = mean_se(&col(5));
            ErrorEstimate {
                mean_abs_error: err.mean,
                std_error: err.se,
                num_paths,
                measured_cost: nu.mean,
                cost_se: nu.se,
                coords: [mean_se(&col(1)), mean_se(&col(2)), mean_se(&col(3)), mean_se(&col(4))],
            }
        })
        .collect())
}

/// Error of a single scheme with the config's path count.
pub fn measure_error(
    setup: &Setup,
    scheme: Box<dyn AdaptiveScheme>,
    settings: RunSettings,
    workers: usize,
) -> Result<ErrorEstimate> {
    let n = scheme.fixed_cost(settings.delta).unwrap_or(0);
    let cell = Cell {
        label: scheme.name().to_string(),
        n,
        delta: settings.delta,
        scheme,
        settings,
        tag: [u64::MAX, n as u64, settings.delta.to_bits()],
    };
    Ok(measure_cells(setup, std::slice::from_ref(&cell), setup.config.num_paths, workers)?[0])
}

/// A row of the error curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub n: usize,
    pub scheme: String,
    pub delta: f64,
    pub estimate: ErrorEstimate,
    /// Clamped lower bound; `None` when `psi` cannot be inverted.
    pub thm1_bound: Option<f64>,
    pub thm1_raw: Option<f64>,
    pub cor3_bound: Option<f64>,
    /// `measured_cost <= N`; only admitted rows are compared with the bound.
    pub admitted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorCurve {
    pub rows: Vec<CurveRow>,
    pub bounds: Vec<BoundPoint>,
}

impl ErrorCurve {
    pub fn admitted(&self) -> impl Iterator<Item = &CurveRow> {
        self.rows.iter().filter(|r| r.admitted)
    }
}

/// The lower bound at each `N` of the curve.
pub fn bound_points(setup: &Setup, ns: &[usize]) -> Result<Vec<BoundPoint>> {
    let mut out = Vec::with_capacity(ns.len());
    for &n in ns {
        match thm1_bound_detail(&setup.consts, &setup.psi, setup.cs.tau1(), setup.delta_for(n)?, n) {
            Ok(p) => out.push(p),
            Err(Error::PsiInverse { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Measures every configured scheme at every `N` and attaches the bounds.
pub fn error_curve(setup: &Setup, workers: usize) -> Result<ErrorCurve> {
    let ns = setup.n_list()?;
    let mut cells = Vec::new();
    for &n in &ns {
        let delta = setup.delta_for(n)?;
        for (k, sc) in setup.config.schemes.iter().enumerate() {
            cells.push(Cell {
                label: sc.label().to_string(),
                n,
                delta,
                scheme: setup.build_scheme(sc, n, delta)?,
                settings: setup.settings(delta),
                tag: [k as u64, n as u64, delta.to_bits()],
            });
        }
    }
    log::info!("error curve: {} cells x {} paths", cells.len(), setup.config.num_paths);
    let estimates = measure_cells(setup, &cells, setup.config.num_paths, workers)?;
    let bounds = bound_points(setup, &ns)?;
    let mut rows = Vec::with_capacity(cells.len());
    for (c, e) in cells.iter().zip(estimates) {
        let b = bounds.iter().find(|b| b.n == c.n);
        let cor3 = match cor3_bound(&setup.plan, &setup.consts, c.n) {
            Ok(v) => Some(v),
            Err(Error::PrefixExhausted { .. } | Error::NoAdmissibleIndex { .. }) => None,
            Err(err) => return Err(err),
        };
        let admitted = e.measured_cost <= c.n as f64;
        if !admitted {
            log::warn!(
                "{} at N = {}: cost {} exceeds N, row refused",
                c.label,
                c.n,
                e.measured_cost
            );
        }
        rows.push(CurveRow {
            n: c.n,
            scheme: c.label.clone(),
            delta: c.delta,
            estimate: e,
            thm1_bound: b.map(|b| b.clamped),
            thm1_raw: b.map(|b| b.raw),
            cor3_bound: cor3,
            admitted,
        });
    }
    Ok(ErrorCurve { rows, bounds })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `error_curve.csv`, `error_breakdown.csv`, `bound_curve.csv`, the
/// schema and the effective config into `dir`.
pub fn write_error_curve(setup: &Setup, curve: &ErrorCurve, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("error_curve.csv"))?;
    w.write_record(schema::ERROR_CURVE.iter().map(|c| c.0))?;
    for r in curve.admitted() {
        let e = &r.estimate;
        w.write_record([
            r.n.to_string(),
            r.scheme.clone(),
            e.mean_abs_error.to_string(),
            e.std_error.to_string(),
            e.measured_cost.to_string(),
            opt(r.thm1_bound),
            opt(r.cor3_bound),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("error_breakdown.csv"))?;
    w.write_record(schema::ERROR_BREAKDOWN.iter().map(|c| c.0))?;
    for r in &curve.rows {
        let e = &r.estimate;
        let mut rec = vec![
            r.n.to_string(),
            r.scheme.clone(),
            r.delta.to_string(),
            e.num_paths.to_string(),
        ];
        for c in &e.coords {
            rec.push(c.mean.to_string());
            rec.push(c.se.to_string());
        }
        rec.extend([
            e.cost_se.to_string(),
            opt(r.thm1_raw),
            opt(r.thm1_bound),
            r.admitted.to_string(),
        ]);
        w.write_record(rec)?;
    }
    w.flush()?;

    write_bound_curve(&curve.bounds, dir)?;
    schema::write_schema(dir)?;
    std::fs::write(dir.join("config.json"), setup.config.to_json()?)?;
    Ok(())
}

pub fn write_bound_curve(points: &[BoundPoint], dir: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(dir.join("bound_curve.csv"))?;
    w.write_record(schema::BOUND_CURVE.iter().map(|c| c.0))?;
    for p in points {
        w.write_record([
            p.n.to_string(),
            p.raw.to_string(),
            p.clamped.to_string(),
            p.d_n.to_string(),
            p.psi_inv_dn.to_string(),
            p.extrapolated.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
