//! Property checks shared by `verify` and the acceptance suite. Each check
//! reports the worst measured statistic next to its threshold.

use rand::Rng;
use rand_distr::{StandardNormal, Uniform};
use serde::Serialize;

use crate::bounds::{cor3_kappa, sine_moment, sine_moment_bound, superpoly_diagnostic, thm1_bound, thm1_bound_detail};
use crate::bridge::{
    bridge_decompose, bridge_functional_variance, bridge_functional_variance_by_parts, conditional_cov,
    conditional_mean, sample_conditional, ObservationSet,
};
use crate::brownian::{
    ito_deterministic, sample_path_with, uniform_grid, uniform_span, x2_via_parts, BrownianPath, ExactEvaluator,
    PathSegment,
};
use crate::coeffs::{CoefficientSet, DerivedConstants};
use crate::error::{Error, Result};
use crate::harness::experiment::{error_curve, master_path, measure_cells, Cell, ErrorCurve};
use crate::harness::setup::Setup;
use crate::psi::{Psi, PsiSpec};
use crate::quad::adaptive_simpson;
use crate::rng::{stream, Lane};
use crate::schemes::{euler_on_samples, run_scheme_with, Estimator, FixedSites, Problem};
use crate::stats::{correlation, ks_critical_1pct, ks_two_sample, mean_se, skewness, variance};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Worst observed statistic.
    pub measured: f64,
    /// The statistic passes when it respects this threshold.
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, measured: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Check {
            name: name.to_string(),
            passed,
            measured,
            threshold,
            detail: detail.into(),
        }
    }

    /// Passes when `measured <= threshold`.
    fn at_most(name: &str, measured: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Check::new(name, measured <= threshold, measured, threshold, detail)
    }

    fn failed(name: &str, detail: impl Into<String>) -> Self {
        Check::new(name, false, f64::NAN, f64::NAN, detail)
    }
}

/// Stream tags of the individual suites.
mod tag {
    pub const INDEPENDENCE: u64 = 1;
    pub const SYMMETRY: u64 = 2;
    pub const COND_COV: u64 = 3;
    pub const TOWER: u64 = 4;
    pub const TOWER_REF: u64 = 5;
    pub const ISOMETRY: u64 = 6;
    pub const PSI: u64 = 7;
    pub const SIGMA1: u64 = 8;
    pub const FIXTURE: u64 = 9;
}

/// `thm1_bound(N, delta_N) = a_N` for every stored `N >= N0`.
pub fn self_consistency(setup: &Setup) -> Check {
    const NAME: &str = "self_consistency_identity";
    let Some(n0) = setup.n0 else {
        return Check::failed(NAME, "no admissible N0 in the plan prefix");
    };
    let mut worst = 0.0f64;
    let mut worst_n = n0;
    for n in n0..=setup.plan.len() {
        let res = (|| -> Result<f64> {
            let b = thm1_bound(&setup.consts, &setup.psi, setup.cs.tau1(), setup.plan.delta(n)?, n)?;
            let a = setup.plan.a(n)?;
            Ok((b - a).abs() / a)
        })();
        match res {
            Ok(r) if r.is_finite() => {
                if r > worst {
                    worst = r;
                    worst_n = n;
                }
            }
            Ok(_) => return Check::failed(NAME, format!("non-finite bound at N = {n}")),
            Err(e) => return Check::failed(NAME, format!("N = {n}: {e}")),
        }
    }
    Check::at_most(
        NAME,
        worst,
        1e-8,
        format!(
            "max relative deviation over N = {n0}..={} at N = {worst_n}",
            setup.plan.len()
        ),
    )
}

/// `E|sin Y| >= exp(-pi^2/8)/sqrt(8 pi)` on the grid `a in -10..=10`,
/// `tau in {1, 2, 5, 50}`, with margin above the quadrature tolerance.
pub fn sine_moment_sweep(quad_tol: f64) -> Check {
    const NAME: &str = "sine_moment_sweep";
    let bound = sine_moment_bound();
    let mut min_margin = f64::INFINITY;
    let mut at = (0.0, 0.0);
    for a in -10..=10 {
        for tau in [1.0, 2.0, 5.0, 50.0] {
            match sine_moment(a as f64, tau, quad_tol) {
                Ok(v) if v - bound < min_margin => {
                    min_margin = v - bound;
                    at = (a as f64, tau);
                }
                Ok(_) => {}
                Err(e) => return Check::failed(NAME, e.to_string()),
            }
        }
    }
    Check::new(
        NAME,
        min_margin > quad_tol,
        min_margin,
        quad_tol,
        format!("smallest margin over the bound at a = {}, tau = {}", at.0, at.1),
    )
}

/// `Var(∫ B dt) = (b - a)^3/12` for three intervals.
pub fn bridge_variance_identity() -> Check {
    const NAME: &str = "bridge_variance_identity";
    let mut worst = 0.0f64;
    for (a, b) in [(0.0f64, 1.0f64), (0.1, 0.35), (0.25, 2.0)] {
        let exact = (b - a).powi(3) / 12.0;
        match bridge_functional_variance(|_| 1.0, a, b, 1e-13) {
            Ok(v) => worst = worst.max((v - exact).abs() / exact),
            Err(e) => return Check::failed(NAME, e.to_string()),
        }
    }
    Check::at_most(
        NAME,
        worst,
        1e-8,
        "max relative deviation over (0,1), (0.1,0.35), (0.25,2)",
    )
}

/// Left-point Itô sum against the integration-by-parts formula on fine
/// grids.
pub fn ito_parts_crosscheck(setup: &Setup, paths: usize) -> Check {
    const NAME: &str = "ito_vs_parts";
    let grid = uniform_grid(setup.cs.t_end(), 1usize << setup.config.fine_grid_exp);
    let mut worst = 0.0f64;
    for i in 0..paths as u64 {
        let r = (|| -> Result<f64> {
            let p = master_path(setup.config.master_seed, &grid, i)?;
            let ito = ito_deterministic(&p, setup.cs.f(), 0.0, setup.cs.tau1())?;
            Ok((ito - x2_via_parts(&p, &setup.cs)?).abs())
        })();
        match r {
            Ok(d) => worst = worst.max(d),
            Err(e) => return Check::failed(NAME, e.to_string()),
        }
    }
    Check::new(
        NAME,
        worst < 1e-3,
        worst,
        1e-3,
        format!(
            "max |difference| over {paths} paths on 2^{} steps",
            setup.config.fine_grid_exp
        ),
    )
}

const BRIDGE_GRID: usize = 256;

fn bridge_fixture(t_end: f64) -> (Vec<f64>, f64, f64) {
    let g = uniform_grid(t_end, BRIDGE_GRID);
    let (t0, t1) = (g[16], g[32]);
    (g, t0, t1)
}

/// `W̃(r)` and `B(t)` are uncorrelated for five `(r, t)` pairs.
pub fn bridge_independence(seed: u64, t_end: f64, samples: usize) -> Check {
    const NAME: &str = "bridge_independence";
    let (grid, t0, t1) = bridge_fixture(t_end);
    let pairs = [(8usize, 20usize), (16, 24), (32, 28), (64, 18), (128, 30)];
    let mut xs = vec![Vec::with_capacity(samples); pairs.len()];
    let mut ys = vec![Vec::with_capacity(samples); pairs.len()];
    for i in 0..samples as u64 {
        let p = match sample_path_with(&grid, &mut stream(seed, Lane::Scratch, &[tag::INDEPENDENCE], i)) {
            Ok(p) => p,
            Err(e) => return Check::failed(NAME, e.to_string()),
        };
        let d = match bridge_decompose(&p, t0, t1) {
            Ok(d) => d,
            Err(e) => return Check::failed(NAME, e.to_string()),
        };
        for (k, &(r, t)) in pairs.iter().enumerate() {
            let outer = d
                .outer
                .index_of(grid[r])
                .map(|j| d.outer.values()[j])
                .unwrap_or(f64::NAN);
            let inner = d
                .bridge
                .index_of(grid[t])
                .map(|j| d.bridge.values()[j])
                .unwrap_or(f64::NAN);
            xs[k].push(outer);
            ys[k].push(inner);
        }
    }
    let worst = (0..pairs.len())
        .map(|k| correlation(&xs[k], &ys[k]).abs() * (samples as f64).sqrt())
        .fold(0.0f64, f64::max);
    Check::at_most(
        NAME,
        worst,
        4.0,
        format!("max |corr| / SE over 5 pairs, {samples} samples"),
    )
}

/// A linear functional of `B` is symmetric: mean within 3 SE, skewness
/// within 4 SE of zero.
pub fn bridge_symmetry(seed: u64, t_end: f64, samples: usize) -> Vec<Check> {
    let (grid, t0, t1) = bridge_fixture(t_end);
    let mut vals = Vec::with_capacity(samples);
    for i in 0..samples as u64 {
        let r = sample_path_with(&grid, &mut stream(seed, Lane::Scratch, &[tag::SYMMETRY], i))
            .and_then(|p| bridge_decompose(&p, t0, t1));
        let d = match r {
            Ok(d) => d,
            Err(e) => return vec![Check::failed("bridge_symmetry", e.to_string())],
        };
        let (t, b) = (d.bridge.times(), d.bridge.values());
        let l: f64 = (1..t.len())
            .map(|k| (t[k] - t[k - 1]) * (1.0 + 3.0 * t[k - 1]) * b[k - 1])
            .sum();
        vals.push(l);
    }
    let m = mean_se(&vals);
    let (skew, skew_se) = skewness(&vals);
    vec![
        Check::at_most(
            "bridge_symmetry_mean",
            m.mean.abs() / m.se,
            3.0,
            format!("|mean| / SE, {samples} samples"),
        ),
        Check::at_most(
            "bridge_symmetry_skewness",
            skew.abs() / skew_se,
            4.0,
            format!("|skewness| / SE, {samples} samples"),
        ),
    ]
}

fn fixture_observations(seed: u64, t_end: f64) -> Result<(ObservationSet, Vec<f64>)> {
    let delta = 0.125 * t_end;
    let sites = [0.02 * t_end, 0.09 * t_end, 0.05 * t_end];
    let mut sorted = sites.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tail_t = uniform_span(delta, t_end, 64);
    let mut grid = vec![0.0];
    grid.extend_from_slice(&sorted);
    grid.extend_from_slice(&tail_t);
    let p = sample_path_with(&grid, &mut stream(seed, Lane::Scratch, &[tag::FIXTURE], 0))?;
    let values: Vec<f64> = sites.iter().map(|&s| p.value_at(s)).collect::<Result<_>>()?;
    let tail = p.segment().restrict(delta, t_end);
    let probes = [0.005, 0.012, 0.03, 0.04, 0.045, 0.06, 0.1, 0.11]
        .iter()
        .map(|x| x * t_end)
        .collect();
    Ok((ObservationSet::new(delta, &sites, &values, tail)?, probes))
}

/// Conditional draws have mean `m` and covariance `R` entrywise within 4 SE.
pub fn conditional_covariance(seed: u64, t_end: f64, samples: usize) -> Check {
    const NAME: &str = "conditional_covariance";
    let (obs, probes) = match fixture_observations(seed, t_end) {
        Ok(v) => v,
        Err(e) => return Check::failed(NAME, e.to_string()),
    };
    let k = probes.len();
    let mut cols = vec![Vec::with_capacity(samples); k];
    for i in 0..samples as u64 {
        let s = seed ^ tag::COND_COV.rotate_left(48);
        match sample_conditional(&obs, &probes, s.wrapping_add(i)) {
            Ok(d) => {
                for (col, v) in cols.iter_mut().zip(d.values()) {
                    col.push(*v);
                }
            }
            Err(e) => return Check::failed(NAME, e.to_string()),
        }
    }
    let n = samples as f64;
    let mut worst = 0.0f64;
    let r = |a: usize, b: usize| conditional_cov(&obs, probes[a], probes[b]).unwrap_or(f64::NAN);
    for a in 0..k {
        let m = conditional_mean(&obs, probes[a]).unwrap_or(f64::NAN);
        let s = mean_se(&cols[a]);
        let se_m = (r(a, a) / n).sqrt();
        if se_m > 0.0 {
            worst = worst.max((s.mean - m).abs() / se_m);
        }
        for b in a..k {
            let emp = crate::stats::covariance(&cols[a], &cols[b]);
            let se = ((r(a, a) * r(b, b) + r(a, b).powi(2)) / n).sqrt();
            if se > 0.0 {
                worst = worst.max((emp - r(a, b)).abs() / se);
            } else if emp != 0.0 {
                worst = f64::INFINITY;
            }
        }
    }
    Check::at_most(
        NAME,
        worst,
        4.0,
        format!("max |empirical - exact| / SE over 8 probes, {samples} draws"),
    )
}

/// Drawing a path, observing it, and drawing conditionally reproduces the
/// unconditional marginal at a probe point (two-sample KS at 1%).
pub fn tower_consistency(seed: u64, t_end: f64, samples: usize) -> Check {
    const NAME: &str = "tower_consistency";
    let grid = uniform_grid(t_end, BRIDGE_GRID);
    let (delta, sites) = (grid[32], [grid[8], grid[20]]);
    let probe = 0.05 * t_end;
    let mut cond = Vec::with_capacity(samples);
    let mut reference = Vec::with_capacity(samples);
    let mut refs = stream(seed, Lane::Scratch, &[tag::TOWER_REF], 0);
    for i in 0..samples as u64 {
        let r = (|| -> Result<f64> {
            let p = sample_path_with(&grid, &mut stream(seed, Lane::Scratch, &[tag::TOWER], i))?;
            let vals = [p.value_at(sites[0])?, p.value_at(sites[1])?];
            let obs = ObservationSet::new(delta, &sites, &vals, p.segment().restrict(delta, t_end))?;
            let s = seed ^ tag::TOWER.rotate_left(48);
            Ok(sample_conditional(&obs, &[probe], s.wrapping_add(i))?.values()[0])
        })();
        match r {
            Ok(v) => cond.push(v),
            Err(e) => return Check::failed(NAME, e.to_string()),
        }
        let z: f64 = refs.sample(StandardNormal);
        reference.push(probe.sqrt() * z);
    }
    let d = ks_two_sample(&cond, &reference);
    Check::at_most(
        NAME,
        d,
        ks_critical_1pct(samples, samples),
        format!("KS statistic, {samples} vs {samples}"),
    )
}

/// `Var X2(tau1) = ∫ f^2` and `Var X3(tau2) = beta` within 4 SE.
pub fn ito_isometry(setup: &Setup, samples: usize, grid_exp: u32) -> Vec<Check> {
    let cs = &setup.cs;
    let (tau1, tau2) = (cs.tau1(), cs.tau2());
    let mut grid: Vec<f64> = uniform_grid(cs.t_end(), 1usize << grid_exp)
        .into_iter()
        .filter(|&t| t <= tau2)
        .collect();
    grid.extend([tau1, tau2]);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let (mut x2, mut x3) = (Vec::with_capacity(samples), Vec::with_capacity(samples));
    for i in 0..samples as u64 {
        let r = (|| -> Result<(f64, f64)> {
            let p = sample_path_with(
                &grid,
                &mut stream(setup.config.master_seed, Lane::Scratch, &[tag::ISOMETRY], i),
            )?;
            Ok((
                ito_deterministic(&p, cs.f(), 0.0, tau1)?,
                ito_deterministic(&p, cs.g(), tau1, tau2)?,
            ))
        })();
        match r {
            Ok((a, b)) => {
                x2.push(a);
                x3.push(b);
            }
            Err(e) => return vec![Check::failed("ito_isometry", e.to_string())],
        }
    }
    let f2 = match adaptive_simpson(|t| cs.f().eval(t).powi(2), 0.0, tau1, 1e-14) {
        Ok(v) => v,
        Err(e) => return vec![Check::failed("ito_isometry", e.to_string())],
    };
    let check = |name: &str, xs: &[f64], target: f64| {
        let v = variance(xs);
        let m4 = {
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / xs.len() as f64
        };
        let se = ((m4 - v * v) / xs.len() as f64).sqrt();
        Check::at_most(
            name,
            (v - target).abs() / se,
            4.0,
            format!(
                "empirical variance {v:.6e} vs {target:.6e}, {} paths, 2^{grid_exp} steps",
                xs.len()
            ),
        )
    };
    vec![
        check("ito_isometry_x2", &x2, f2),
        check("ito_isometry_x3", &x3, setup.consts.beta),
    ]
}

/// Euler on `2^(k-4)`, `2^(k-2)`, `2^k` steps of the oracle grid against
/// the oracle, with `psi = 1`.
pub fn oracle_equivalence(setup: &Setup, paths: usize) -> Check {
    const NAME: &str = "oracle_equivalence";
    let k = setup.config.fine_grid_exp;
    if k < 5 {
        return Check::failed(NAME, "fine grid too coarse");
    }
    let problem = match Problem::new(setup.cs.clone(), Psi::Constant { value: 1.0 }) {
        Ok(p) => p,
        Err(e) => return Check::failed(NAME, e.to_string()),
    };
    let grid = uniform_grid(setup.cs.t_end(), 1usize << k);
    let oracle = match ExactEvaluator::new(&setup.cs, &grid) {
        Ok(o) => o,
        Err(e) => return Check::failed(NAME, e.to_string()),
    };
    let strides = [16usize, 4, 1];
    let mut dev = [0.0f64; 3];
    for i in 0..paths as u64 {
        let p = match master_path(setup.config.master_seed, &grid, i) {
            Ok(p) => p,
            Err(e) => return Check::failed(NAME, e.to_string()),
        };
        let exact = oracle.solve(problem.psi(), &p);
        for (j, &s) in strides.iter().enumerate() {
            let sub = p.subsample(s);
            dev[j] += euler_on_samples(&problem, sub.times(), sub.values()).dist(&exact) / paths as f64;
        }
    }
    let ordered = dev[0] > dev[1] && dev[1] > dev[2];
    Check::new(
        NAME,
        ordered && dev[2] < 3.0 * dev[1],
        dev[2],
        3.0 * dev[1],
        format!(
            "mean |deviation| 2^{}: {:.4e}, 2^{}: {:.4e}, 2^{}: {:.4e}",
            k - 4,
            dev[0],
            k - 2,
            dev[1],
            k,
            dev[2]
        ),
    )
}

/// Euler with constant `psi` improves with the step count and gains a
/// factor of at least 3 from 8 to 512 steps.
pub fn euler_sanity(setup: &Setup, paths: usize) -> Check {
    const NAME: &str = "euler_convergence";
    let problem = match Problem::new(setup.cs.clone(), Psi::Constant { value: 1.0 }) {
        Ok(p) => p,
        Err(e) => return Check::failed(NAME, e.to_string()),
    };
    let k = setup.config.fine_grid_exp as usize;
    let steps = [8usize, 64, 256, 512, 1024];
    if k < 10 {
        return Check::failed(NAME, "fine grid must have at least 2^10 steps");
    }
    let grid = uniform_grid(setup.cs.t_end(), 1usize << k);
    let oracle = match ExactEvaluator::new(&setup.cs, &grid) {
        Ok(o) => o,
        Err(e) => return Check::failed(NAME, e.to_string()),
    };
    let mut errs = vec![0.0f64; steps.len()];
    for i in 0..paths as u64 {
        let p = match master_path(setup.config.master_seed, &grid, i) {
            Ok(p) => p,
            Err(e) => return Check::failed(NAME, e.to_string()),
        };
        let exact = oracle.solve(problem.psi(), &p);
        for (j, &n) in steps.iter().enumerate() {
            let sub = p.subsample((1usize << k) / n);
            errs[j] += euler_on_samples(&problem, sub.times(), sub.values()).dist(&exact) / paths as f64;
        }
    }
    let monotone = errs.windows(2).all(|w| w[1] < w[0]);
    let ratio = errs[0] / errs[3];
    Check::new(
        NAME,
        monotone && ratio >= 3.0,
        ratio,
        3.0,
        format!("mean errors at {steps:?} steps: {errs:?} over {paths} paths"),
    )
}

/// Error-curve dominance: admitted rows respect both lower bounds up to 2 SE.
pub fn dominance(setup: &Setup, curve: &ErrorCurve) -> Vec<Check> {
    let kappa = cor3_kappa(&setup.plan, &setup.consts).ok();
    let mut worst_thm = f64::INFINITY;
    let mut worst_cor = f64::INFINITY;
    let mut detail_thm = String::new();
    let mut detail_cor = String::new();
    let mut compared = 0usize;
    for r in curve.admitted() {
        let e = &r.estimate;
        if let Some(b) = r.thm1_bound {
            let slack = e.mean_abs_error + 2.0 * e.std_error - b;
            if slack < worst_thm {
                worst_thm = slack;
                detail_thm = format!("tightest: {} at N = {}", r.scheme, r.n);
            }
            compared += 1;
        }
        if let (Some(k), Ok(a)) = (kappa, setup.plan.a(r.n)) {
            let slack = e.mean_abs_error - (k * a - 2.0 * e.std_error);
            if slack < worst_cor {
                worst_cor = slack;
                detail_cor = format!("tightest: {} at N = {}", r.scheme, r.n);
            }
        }
    }
    let schemes_ok = setup
        .config
        .schemes
        .iter()
        .all(|s| curve.admitted().any(|r| r.scheme == s.label()));
    let refused = curve.rows.len() - curve.admitted().count();
    vec![
        Check::new(
            "lower_bound_dominance",
            compared > 0 && schemes_ok && worst_thm >= 0.0,
            worst_thm,
            0.0,
            format!("min(error + 2 SE - bound) over {compared} admitted rows ({refused} refused); {detail_thm}"),
        ),
        Check::new(
            "scaled_bound_dominance",
            kappa.is_some() && schemes_ok && worst_cor >= 0.0,
            worst_cor,
            0.0,
            format!("min(error - (kappa a_N - 2 SE)); {detail_cor}"),
        ),
    ]
}

fn is_plateau(spec: &PsiSpec, y: f64) -> bool {
    spec.plateaus().contains(&y)
}

/// Monotonicity, positivity, exact knot values, C² proxy at knots,
/// round-trip inversion and the growth hook.
pub fn psi_suite(spec: &PsiSpec, consts: &DerivedConstants, setup: &Setup, pairs: usize, seed: u64) -> Vec<Check> {
    let psi = Psi::Glued(spec.clone());
    let b = spec.knots();
    let (lo, hi) = (b[0] - 5.0, b[b.len() - 1] + 5.0);
    let mut rng = stream(seed, Lane::Scratch, &[tag::PSI], 0);
    let span = Uniform::new(lo, hi).expect("finite span");
    let mut bad_order = 0usize;
    let mut ties = 0usize;
    let mut min_val = f64::INFINITY;
    for _ in 0..pairs {
        let (u, v): (f64, f64) = (rng.sample(span), rng.sample(span));
        let (x, xp) = if u <= v { (u, v) } else { (v, u) };
        let (y, yp) = (spec.eval(x), spec.eval(xp));
        min_val = min_val.min(y).min(yp);
        if x < xp && y >= yp {
            // flat to machine precision only on a knot plateau
            if y == yp && is_plateau(spec, y) {
                ties += 1;
            } else {
                bad_order += 1;
            }
        }
    }
    let knot_dev = b
        .iter()
        .zip(spec.plateaus())
        .map(|(x, d)| (spec.eval(*x) - d).abs())
        .fold(0.0f64, f64::max);

    let h = 1e-4;
    let mut smooth_gap = 0.0f64;
    for &k in b {
        let f = |x: f64| spec.eval(x);
        let scale = 1e-2 * (1.0 + f(k).abs());
        let d1l = (f(k) - f(k - h)) / h;
        let d1r = (f(k + h) - f(k)) / h;
        let d2l = (f(k) - 2.0 * f(k - h) + f(k - 2.0 * h)) / (h * h);
        let d2r = (f(k + 2.0 * h) - 2.0 * f(k + h) + f(k)) / (h * h);
        smooth_gap = smooth_gap.max((d1l - d1r).abs() / scale).max((d2l - d2r).abs() / scale);
    }

    let inner = Uniform::new(b[0], b[b.len() - 1]).expect("finite span");
    let mut y_dev = 0.0f64;
    let mut x_dev = 0.0f64;
    let mut resolvable = 0usize;
    let trips = pairs.min(20_000);
    for _ in 0..trips {
        let x: f64 = rng.sample(inner);
        let y = spec.eval(x);
        let Ok(xi) = spec.inv(y) else {
            y_dev = f64::INFINITY;
            continue;
        };
        y_dev = y_dev.max((spec.eval(xi) - y).abs() / y);
        if spec.eval(x - 1e-8) < y && y < spec.eval(x + 1e-8) {
            resolvable += 1;
            x_dev = x_dev.max((xi - x).abs());
        }
    }

    let mut growth = Vec::new();
    for q in [1.0, 2.0, 4.0] {
        let r = superpoly_diagnostic(
            &psi,
            consts,
            setup.cs.tau1(),
            |n| setup.plan.delta(n),
            q,
            spec.n0()..=spec.n_last(),
        );
        growth.push(match r {
            Ok(d) => Check::new(
                &format!("psi_growth_q{q}"),
                d.tail_increasing,
                d.curve.bound_values.last().copied().unwrap_or(f64::NAN),
                f64::NAN,
                "N^q exp(-psi^-1(d_N)^2/beta) increasing on the second half of the stored range",
            ),
            Err(e) => Check::failed(&format!("psi_growth_q{q}"), e.to_string()),
        });
    }

    let mut out = vec![
        Check::at_most(
            "psi_monotone",
            bad_order as f64,
            0.0,
            format!("order violations in {pairs} pairs on [b_N0 - 5, b_last + 5]; {ties} pairs share a knot plateau"),
        ),
        Check::new("psi_positive", min_val > 0.0, min_val, 0.0, "smallest sampled value"),
        Check::at_most("psi_knot_values", knot_dev, 0.0, "max |psi(b_N) - d_N|"),
        Check::at_most(
            "psi_knot_smoothness",
            smooth_gap,
            1.0,
            "max one-sided difference mismatch at knots, in units of 1e-2 (1 + |psi|), offset 1e-4",
        ),
        Check::at_most(
            "psi_roundtrip_value",
            y_dev,
            1e-9,
            format!("max relative |psi(psi^-1(y)) - y| over {trips} points"),
        ),
        Check::at_most(
            "psi_roundtrip_abscissa",
            x_dev,
            1e-8,
            format!("max |psi^-1(psi(x)) - x| over the {resolvable} of {trips} points where psi resolves 1e-8"),
        ),
        Check::new(
            "psi_attains_one",
            psi.attains_one(),
            psi.inv(1.0).unwrap_or(f64::NAN),
            f64::NAN,
            "psi^-1(1)",
        ),
    ];
    out.extend(growth);
    out
}

/// `Var(∫ f' B) >= alpha gap^3/12` on gaps inside `[0, tau1/2]`, and the two
/// quadrature routes agree.
pub fn bridge_variance_lower_bound(cs: &CoefficientSet, consts: &DerivedConstants, quad_tol: f64) -> Vec<Check> {
    let half = 0.5 * cs.tau1();
    let f = cs.f();
    let gaps = [
        (0.0, half),
        (0.0, 0.25 * half),
        (0.3 * half, 0.6 * half),
        (0.9 * half, half),
        (0.5 * half, 0.52 * half),
    ];
    let mut worst = f64::INFINITY;
    let mut route = 0.0f64;
    for (a, b) in gaps {
        let r = bridge_functional_variance(|t| f.deriv(t), a, b, quad_tol * 1e-4).and_then(|two| {
            Ok((
                two,
                bridge_functional_variance_by_parts(|t| f.eval(t), a, b, quad_tol * 1e-4)?,
            ))
        });
        match r {
            Ok((two, one)) => {
                worst = worst.min(two - (consts.alpha * (b - a).powi(3) / 12.0 - quad_tol));
                route = route.max((two - one).abs() / one);
            }
            Err(e) => return vec![Check::failed("bridge_variance_lower_bound", e.to_string())],
        }
    }
    vec![
        Check::new(
            "bridge_variance_lower_bound",
            worst >= 0.0,
            worst,
            0.0,
            "min(variance - alpha gap^3/12 + tol) over 5 gaps",
        ),
        Check::at_most(
            "bridge_variance_routes",
            route,
            1e-6,
            "relative gap between double quadrature and by-parts route",
        ),
    ]
}

/// Summing the per-gap variances over `n` sites in `(0, delta)` stays above
/// `alpha delta^3 / (96 n^2)`.
pub fn gap_sum_lower_bound(cs: &CoefficientSet, consts: &DerivedConstants, seed: u64) -> Check {
    const NAME: &str = "gap_sum_lower_bound";
    let delta = 0.5 * cs.tau1();
    let f = cs.f();
    let mut rng = stream(seed, Lane::Scratch, &[tag::SIGMA1], 0);
    let mut worst = f64::INFINITY;
    for n in [1usize, 3, 10, 25] {
        for layout in 0..3 {
            let mut pts: Vec<f64> = if layout == 0 {
                (1..=n).map(|k| k as f64 * delta / (n + 1) as f64).collect()
            } else {
                let u = Uniform::new(0.0, delta).expect("span");
                (0..n).map(|_| rng.sample(u)).collect()
            };
            pts.sort_by(f64::total_cmp);
            pts.dedup();
            let mut knots = vec![0.0];
            knots.extend(pts);
            knots.push(delta);
            let mut sum = 0.0;
            for w in knots.windows(2) {
                match bridge_functional_variance_by_parts(|t| f.eval(t), w[0], w[1], 1e-16) {
                    Ok(v) => sum += v,
                    Err(e) => return Check::failed(NAME, e.to_string()),
                }
            }
            let bound = consts.alpha * delta.powi(3) / (96.0 * (n * n) as f64);
            worst = worst.min(sum / bound);
        }
    }
    Check::new(
        NAME,
        worst >= 1.0,
        worst,
        1.0,
        "min ratio of summed gap variance to alpha delta^3/(96 n^2)",
    )
}

/// The raw bound never exceeds `c1`.
pub fn bound_below_c1(setup: &Setup) -> Check {
    const NAME: &str = "bound_below_c1";
    let mut worst = f64::NEG_INFINITY;
    for n in 1..=setup.plan.len() {
        let Ok(delta) = setup.delta_for(n) else { continue };
        match thm1_bound_detail(&setup.consts, &setup.psi, setup.cs.tau1(), delta, n) {
            Ok(p) => worst = worst.max(p.raw - setup.consts.c1),
            Err(Error::PsiInverse { .. }) => {}
            Err(e) => return Check::failed(NAME, e.to_string()),
        }
    }
    Check::new(
        NAME,
        worst < 0.0,
        worst,
        0.0,
        "max(raw bound - c1) over the plan prefix",
    )
}

/// Conditional median error is at most the Euler error on the same sites
/// plus 2 SE.
pub fn conditional_vs_euler(setup: &Setup, n: usize, paths: usize, workers: usize) -> Check {
    const NAME: &str = "conditional_median_vs_euler";
    let r = (|| -> Result<(f64, f64, f64)> {
        let delta = setup.delta_for(n)?;
        let mk = |est: Estimator, k: u64| -> Result<Cell> {
            Ok(Cell {
                label: format!("{est:?}"),
                n,
                delta,
                scheme: Box::new(FixedSites::equidistant(setup.problem.clone(), delta, n, est)?),
                settings: setup.settings(delta),
                tag: [1000 + k, n as u64, delta.to_bits()],
            })
        };
        let cells = [
            mk(Estimator::ConditionalMedian { inner_mc: 64 }, 0)?,
            mk(Estimator::InducedEuler, 1)?,
        ];
        let e = measure_cells(setup, &cells, paths, workers)?;
        let se = (e[0].std_error.powi(2) + e[1].std_error.powi(2)).sqrt();
        Ok((e[0].mean_abs_error, e[1].mean_abs_error, se))
    })();
    match r {
        Ok((med, eul, se)) => Check::new(
            NAME,
            med <= eul + 2.0 * se,
            med - eul,
            2.0 * se,
            format!("median {med:.4e} vs euler {eul:.4e} at N = {n}, {paths} paths"),
        ),
        Err(e) => Check::failed(NAME, e.to_string()),
    }
}

/// Running a scheme twice on one master path gives identical records.
pub fn path_consistency(setup: &Setup, n: usize) -> Check {
    const NAME: &str = "path_consistency";
    let r = (|| -> Result<bool> {
        let delta = setup.delta_for(n)?;
        let grid = uniform_grid(setup.cs.t_end(), 1usize << setup.config.fine_grid_exp.min(12));
        let p: BrownianPath = master_path(setup.config.master_seed, &grid, 0)?;
        for sc in &setup.config.schemes {
            let scheme = setup.build_scheme(sc, n, delta)?;
            let run = || {
                run_scheme_with(
                    scheme.as_ref(),
                    &setup.settings(delta),
                    &p,
                    stream(7, Lane::Refinement, &[], 0),
                    &mut stream(7, Lane::InnerMonteCarlo, &[], 0),
                )
            };
            if run()? != run()? {
                return Ok(false);
            }
        }
        Ok(true)
    })();
    match r {
        Ok(same) => Check::new(
            NAME,
            same,
            f64::NAN,
            f64::NAN,
            "bit-identical records for every configured scheme",
        ),
        Err(e) => Check::failed(NAME, e.to_string()),
    }
}

/// Error curves with one and two workers serialize identically.
pub fn reproducibility(setup: &Setup, paths: usize) -> Check {
    const NAME: &str = "worker_reproducibility";
    let r = (|| -> Result<bool> {
        let mut cfg = setup.config.clone();
        cfg.num_paths = paths;
        let ns = setup.n_list()?;
        cfg.n_list = Some(ns.into_iter().take(2).collect());
        let s = Setup::new(&cfg)?;
        let a = serde_json::to_string(&error_curve(&s, 1)?)?;
        let b = serde_json::to_string(&error_curve(&s, 2)?)?;
        Ok(a == b)
    })();
    match r {
        Ok(same) => Check::new(
            NAME,
            same,
            f64::NAN,
            f64::NAN,
            format!("error curves over {paths} paths, 1 vs 2 workers"),
        ),
        Err(e) => Check::failed(NAME, e.to_string()),
    }
}

/// An observed tail built from a path, for callers assembling histories.
pub fn tail_of(path: &BrownianPath, delta: f64) -> PathSegment {
    path.segment().restrict(delta, path.t_last())
}
