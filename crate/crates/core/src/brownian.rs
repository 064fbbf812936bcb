//! Brownian paths on grids, bridge refinement, Itô integrals of
//! deterministic integrands and the closed-form strong solution.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::coeffs::{CoefficientSet, SmoothFn};
use crate::error::{Error, Result};
use crate::psi::Psi;
use crate::quad::adaptive_simpson;
use crate::rng::{stream, Lane, StreamRng};

/// Tolerance for `∫h`, shared by every evaluator of `X4`.
pub const GAMMA_TOL: f64 = 1e-12;

/// `n_steps + 1` uniform points on `[0, t_end]`; the last point is `t_end`
/// exactly.
pub fn uniform_grid(t_end: f64, n_steps: usize) -> Vec<f64> {
    uniform_span(0.0, t_end, n_steps)
}

/// `n_steps + 1` uniform points on `[lo, hi]` with exact endpoints.
pub fn uniform_span(lo: f64, hi: f64, n_steps: usize) -> Vec<f64> {
    let n = n_steps.max(1);
    let h = (hi - lo) / n as f64;
    let mut t: Vec<f64> = (0..=n).map(|k| lo + k as f64 * h).collect();
    t[n] = hi;
    t
}

pub(crate) fn check_sorted(times: &[f64]) -> Result<()> {
    for (i, w) in times.windows(2).enumerate() {
        if !(w[0] < w[1]) || !w[1].is_finite() {
            return Err(Error::UnsortedGrid { index: i + 1 });
        }
    }
    if times.first().is_some_and(|t| !t.is_finite()) {
        return Err(Error::UnsortedGrid { index: 0 });
    }
    Ok(())
}

/// A finite set of `(time, value)` samples with strictly increasing times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSegment {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl PathSegment {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::invalid("path", "times and values differ in length"));
        }
        check_sorted(&times)?;
        Ok(PathSegment { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn len(&self) -> usize {
        self.times.len()
    }
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index of `t` if it is a sample time.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let i = self.times.partition_point(|&s| s < t);
        (i < self.times.len() && self.times[i] == t).then_some(i)
    }

    /// Piecewise-linear interpolation; constant beyond the ends.
    pub fn interp(&self, t: f64) -> f64 {
        let i = self.times.partition_point(|&s| s <= t);
        if i == 0 {
            return self.values[0];
        }
        if i == self.times.len() {
            return self.values[i - 1];
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let (w0, w1) = (self.values[i - 1], self.values[i]);
        w0 + (t - t0) / (t1 - t0) * (w1 - w0)
    }

    /// The samples with times in `[a, b]`.
    pub fn restrict(&self, a: f64, b: f64) -> PathSegment {
        let i = self.times.partition_point(|&s| s < a);
        let j = self.times.partition_point(|&s| s <= b);
        PathSegment {
            times: self.times[i..j].to_vec(),
            values: self.values[i..j].to_vec(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "w"])?;
        for (t, v) in self.times.iter().zip(&self.values) {
            w.write_record([format!("{t:e}"), format!("{v:e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A sampled Brownian path: a [`PathSegment`] starting at `(0, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrownianPath(PathSegment);

impl BrownianPath {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        match times.first() {
            Some(&0.0) => {}
            Some(&t0) => return Err(Error::GridStart { first: t0 }),
            None => return Err(Error::GridStart { first: f64::NAN }),
        }
        if values[0] != 0.0 {
            return Err(Error::invalid("path", "W(0) must be 0"));
        }
        PathSegment::new(times, values).map(BrownianPath)
    }

    /// `w(t)` sampled on `grid`, with `w(0)` forced to 0.
    pub fn from_fn(grid: Vec<f64>, w: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.iter().map(|&t| if t == 0.0 { 0.0 } else { w(t) }).collect();
        BrownianPath::new(grid, values)
    }

    pub fn zero(grid: Vec<f64>) -> Result<Self> {
        BrownianPath::from_fn(grid, |_| 0.0)
    }

    pub fn segment(&self) -> &PathSegment {
        &self.0
    }
    pub fn times(&self) -> &[f64] {
        &self.0.times
    }
    pub fn values(&self) -> &[f64] {
        &self.0.values
    }
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn t_last(&self) -> f64 {
        *self.0.times.last().expect("non-empty")
    }

    /// `W(t)` at a grid time.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        self.0
            .index_of(t)
            .map(|i| self.0.values[i])
            .ok_or(Error::NotAGridPoint { t })
    }

    /// Every `stride`-th grid point, keeping the last one.
    pub fn subsample(&self, stride: usize) -> BrownianPath {
        let n = self.len();
        let mut idx: Vec<usize> = (0..n).step_by(stride.max(1)).collect();
        if *idx.last().unwrap() != n - 1 {
            idx.push(n - 1);
        }
        BrownianPath(PathSegment {
            times: idx.iter().map(|&i| self.0.times[i]).collect(),
            values: idx.iter().map(|&i| self.0.values[i]).collect(),
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        self.0.write_csv(out)
    }
}

/// Path on `grid` driven by the master-path stream of `seed`.
pub fn sample_path(grid: &[f64], seed: u64) -> Result<BrownianPath> {
    sample_path_with(grid, &mut stream(seed, Lane::MasterPath, &[], 0))
}

/// Path on `grid` with increments drawn from `rng`.
pub fn sample_path_with(grid: &[f64], rng: &mut StreamRng) -> Result<BrownianPath> {
    match grid.first() {
        Some(&0.0) => {}
        Some(&t0) => return Err(Error::GridStart { first: t0 }),
        None => return Err(Error::GridStart { first: f64::NAN }),
    }
    check_sorted(grid)?;
    let mut values = Vec::with_capacity(grid.len());
    let mut w = 0.0;
    values.push(w);
    for pair in grid.windows(2) {
        let z: f64 = rng.sample(StandardNormal);
        w += (pair[1] - pair[0]).sqrt() * z;
        values.push(w);
    }
    Ok(BrownianPath(PathSegment {
        times: grid.to_vec(),
        values,
    }))
}

/// Values at sorted `queries` drawn from the Brownian law given the
/// `anchors`. A query equal to an anchor time returns the anchor value;
/// queries between anchors are bridge draws, taken left to right so later
/// draws condition on earlier ones. Queries must lie within the anchor span.
pub fn bridge_fill(anchors: &PathSegment, queries: &[f64], rng: &mut StreamRng) -> Result<Vec<f64>> {
    check_sorted(queries)?;
    let (ta, wa) = (&anchors.times, &anchors.values);
    let (lo, hi) = match (ta.first(), ta.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => return Err(Error::invalid("anchors", "empty")),
    };
    let mut out = Vec::with_capacity(queries.len());
    let mut j = 0usize;
    let mut left = (lo, wa[0]);
    for &t in queries {
        if !(lo <= t && t <= hi) {
            return Err(Error::OutOfSpan { t, lo, hi });
        }
        let mut moved = false;
        while j + 1 < ta.len() && ta[j + 1] <= t {
            j += 1;
            moved = true;
        }
        if moved {
            left = (ta[j], wa[j]);
        }
        if ta[j] == t {
            out.push(wa[j]);
            continue;
        }
        let (t1, w1) = (ta[j + 1], wa[j + 1]);
        let (t0, w0) = left;
        let lam = (t - t0) / (t1 - t0);
        let var = (t - t0) * (t1 - t) / (t1 - t0);
        let z: f64 = rng.sample(StandardNormal);
        let w = w0 + lam * (w1 - w0) + var.sqrt() * z;
        out.push(w);
        left = (t, w);
    }
    Ok(out)
}

fn merge(base: &PathSegment, extra_t: &[f64], extra_w: &[f64]) -> PathSegment {
    let n = base.len() + extra_t.len();
    let (mut times, mut values) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let (mut i, mut j) = (0, 0);
    while i < base.len() || j < extra_t.len() {
        let take_base = j == extra_t.len() || (i < base.len() && base.times[i] <= extra_t[j]);
        if take_base {
            if j < extra_t.len() && base.times[i] == extra_t[j] {
                j += 1;
            }
            times.push(base.times[i]);
            values.push(base.values[i]);
            i += 1;
        } else {
            times.push(extra_t[j]);
            values.push(extra_w[j]);
            j += 1;
        }
    }
    PathSegment { times, values }
}

/// Inserts `extra_times` into `path`, drawing the new values from the bridge
/// law given the existing points. Existing samples are kept verbatim.
pub fn refine_path(path: &BrownianPath, extra_times: &[f64], seed: u64) -> Result<BrownianPath> {
    let mut extra = extra_times.to_vec();
    extra.sort_by(f64::total_cmp);
    extra.dedup();
    let mut rng = stream(seed, Lane::Refinement, &[], 0);
    let w = bridge_fill(&path.0, &extra, &mut rng)?;
    Ok(BrownianPath(merge(&path.0, &extra, &w)))
}

/// A master path that answers point queries off its grid by bridge draws,
/// remembering every answer so later queries stay consistent.
#[derive(Debug, Clone)]
pub struct PathOracle<'a> {
    base: &'a BrownianPath,
    extra: PathSegment,
    rng: StreamRng,
}

impl<'a> PathOracle<'a> {
    pub fn new(base: &'a BrownianPath, rng: StreamRng) -> Self {
        PathOracle {
            base,
            extra: PathSegment {
                times: Vec::new(),
                values: Vec::new(),
            },
            rng,
        }
    }

    pub fn t_last(&self) -> f64 {
        self.base.t_last()
    }

    fn neighbour(&self, t: f64) -> ((f64, f64), Option<(f64, f64)>) {
        let pick = |seg: &PathSegment| {
            let i = seg.times.partition_point(|&s| s <= t);
            let left = (i > 0).then(|| (seg.times[i - 1], seg.values[i - 1]));
            let right = (i < seg.len()).then(|| (seg.times[i], seg.values[i]));
            (left, right)
        };
        let (bl, br) = pick(&self.base.0);
        let (el, er) = pick(&self.extra);
        let left = match (bl, el) {
            (Some(a), Some(b)) if b.0 > a.0 => b,
            (Some(a), _) => a,
            (None, Some(b)) => b,
            (None, None) => unreachable!("base starts at 0"),
        };
        let right = match (br, er) {
            (Some(a), Some(b)) => Some(if b.0 < a.0 { b } else { a }),
            (a, b) => a.or(b),
        };
        (left, right)
    }

    /// `W(t)` for `t` in the span of the base path.
    pub fn query(&mut self, t: f64) -> Result<f64> {
        let hi = self.t_last();
        if !(0.0 <= t && t <= hi) {
            return Err(Error::OutOfSpan { t, lo: 0.0, hi });
        }
        let ((t0, w0), right) = self.neighbour(t);
        if t0 == t {
            return Ok(w0);
        }
        let (t1, w1) = right.expect("t within span");
        let lam = (t - t0) / (t1 - t0);
        let var = (t - t0) * (t1 - t) / (t1 - t0);
        let z: f64 = self.rng.sample(StandardNormal);
        let w = w0 + lam * (w1 - w0) + var.sqrt() * z;
        let i = self.extra.times.partition_point(|&s| s < t);
        self.extra.times.insert(i, t);
        self.extra.values.insert(i, w);
        Ok(w)
    }

    /// Values at sorted `times`, inserted in bulk.
    pub fn query_sorted(&mut self, times: &[f64]) -> Result<Vec<f64>> {
        if self.extra.is_empty() {
            let w = bridge_fill(&self.base.0, times, &mut self.rng)?;
            let fresh: Vec<usize> = (0..times.len())
                .filter(|&k| self.base.0.index_of(times[k]).is_none())
                .collect();
            let et: Vec<f64> = fresh.iter().map(|&k| times[k]).collect();
            let ew: Vec<f64> = fresh.iter().map(|&k| w[k]).collect();
            self.extra = PathSegment { times: et, values: ew };
            return Ok(w);
        }
        check_sorted(times)?;
        times.iter().map(|&t| self.query(t)).collect()
    }
}

/// Left-point sum of `integrand(t_i) (W(t_{i+1}) - W(t_i))` over grid points
/// in `[a, b]`.
pub fn ito_deterministic(path: &BrownianPath, integrand: &SmoothFn, a: f64, b: f64) -> Result<f64> {
    ito_sum(path, |t| integrand.eval(t), a, b)
}

pub(crate) fn grid_range(path: &BrownianPath, a: f64, b: f64) -> Result<std::ops::Range<usize>> {
    let (lo, hi) = (0.0, path.t_last());
    for t in [a, b] {
        if !(lo <= t && t <= hi) {
            return Err(Error::OutOfSpan { t, lo, hi });
        }
    }
    let times = path.times();
    let i = times.partition_point(|&s| s < a);
    let j = times.partition_point(|&s| s <= b);
    if j < i + 2 {
        return Err(Error::InsufficientGrid { a, b });
    }
    Ok(i..j)
}

fn ito_sum(path: &BrownianPath, f: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    let r = grid_range(path, a, b)?;
    let (t, w) = (path.times(), path.values());
    Ok((r.start..r.end - 1).map(|i| f(t[i]) * (w[i + 1] - w[i])).sum())
}

fn parts_integral(path: &BrownianPath, fprime: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    let r = grid_range(path, a, b)?;
    let (t, w) = (path.times(), path.values());
    let mut acc = 0.0;
    let mut prev = fprime(t[r.start]) * w[r.start];
    for i in r.start + 1..r.end {
        let cur = fprime(t[i]) * w[i];
        acc += 0.5 * (t[i] - t[i - 1]) * (prev + cur);
        prev = cur;
    }
    Ok(-acc)
}

/// `-∫_0^{tau1} f'(t) W(t) dt` by the trapezoidal rule on the path grid.
pub fn x2_via_parts(path: &BrownianPath, cs: &CoefficientSet) -> Result<f64> {
    parts_integral(path, |t| cs.f().deriv(t), 0.0, cs.tau1())
}

/// `-∫_{tau1}^{tau2} g'(t) W(t) dt` by the trapezoidal rule on the path grid.
pub fn x3_via_parts(path: &BrownianPath, cs: &CoefficientSet) -> Result<f64> {
    parts_integral(path, |t| cs.g().deriv(t), cs.tau1(), cs.tau2())
}

/// The four solution coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolutionVec {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub x4: f64,
}

impl SolutionVec {
    pub fn as_array(&self) -> [f64; 4] {
        [self.x1, self.x2, self.x3, self.x4]
    }

    /// Componentwise absolute differences.
    pub fn abs_diff(&self, other: &SolutionVec) -> [f64; 4] {
        let (a, b) = (self.as_array(), other.as_array());
        std::array::from_fn(|i| (a[i] - b[i]).abs())
    }

    /// Euclidean distance.
    pub fn dist(&self, other: &SolutionVec) -> f64 {
        self.abs_diff(other).iter().map(|d| d * d).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }
}

/// The strong solution at time `t`, with the stochastic integrals as
/// left-point sums on the path grid and `∫h` by adaptive quadrature.
pub fn exact_solution(cs: &CoefficientSet, psi: &Psi, path: &BrownianPath, t: f64) -> Result<SolutionVec> {
    if !(0.0 <= t && t <= cs.t_end()) {
        return Err(Error::OutOfSpan {
            t,
            lo: 0.0,
            hi: cs.t_end(),
        });
    }
    let (tau1, tau2) = (cs.tau1(), cs.tau2());
    let x2 = if t > 0.0 {
        ito_deterministic(path, cs.f(), 0.0, t.min(tau1))?
    } else {
        0.0
    };
    let x3 = if t > tau1 {
        ito_deterministic(path, cs.g(), tau1, t.min(tau2))?
    } else {
        0.0
    };
    let x4 = if t > tau2 {
        let h = cs.h();
        adaptive_simpson(|s| h.eval(s), tau2, t, GAMMA_TOL)? * (x2 * psi.eval(x3)).cos()
    } else {
        0.0
    };
    Ok(SolutionVec { x1: t, x2, x3, x4 })
}

/// Fast evaluation of `exact_solution(.., T)` for many paths on one grid.
#[derive(Debug, Clone)]
pub struct ExactEvaluator {
    times: Vec<f64>,
    f_vals: Vec<f64>,
    g_vals: Vec<f64>,
    f_range: std::ops::Range<usize>,
    g_range: std::ops::Range<usize>,
    gamma: f64,
    t_end: f64,
}

impl ExactEvaluator {
    pub fn new(cs: &CoefficientSet, grid: &[f64]) -> Result<Self> {
        let probe = BrownianPath::zero(grid.to_vec())?;
        if probe.t_last() != cs.t_end() {
            return Err(Error::invalid("grid", "must end at T"));
        }
        let f_range = grid_range(&probe, 0.0, cs.tau1())?;
        let g_range = grid_range(&probe, cs.tau1(), cs.tau2())?;
        let h = cs.h();
        Ok(ExactEvaluator {
            times: grid.to_vec(),
            f_vals: grid.iter().map(|&t| cs.f().eval(t)).collect(),
            g_vals: grid.iter().map(|&t| cs.g().eval(t)).collect(),
            f_range,
            g_range,
            gamma: adaptive_simpson(|s| h.eval(s), cs.tau2(), cs.t_end(), GAMMA_TOL)?,
            t_end: cs.t_end(),
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.times
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `(X2(tau1), X3(tau2))` on a path sampled on the evaluator's grid.
    pub fn integrals(&self, path: &BrownianPath) -> (f64, f64) {
        debug_assert_eq!(path.len(), self.times.len());
        let w = path.values();
        let sum = |vals: &[f64], r: &std::ops::Range<usize>| -> f64 {
            (r.start..r.end - 1).map(|i| vals[i] * (w[i + 1] - w[i])).sum()
        };
        (sum(&self.f_vals, &self.f_range), sum(&self.g_vals, &self.g_range))
    }

    pub fn solve(&self, psi: &Psi, path: &BrownianPath) -> SolutionVec {
        let (x2, x3) = self.integrals(path);
        SolutionVec {
            x1: self.t_end,
            x2,
            x3,
            x4: self.gamma * (x2 * psi.eval(x3)).cos(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{make_default_coeffs, Support};

    fn default_cs() -> CoefficientSet {
        make_default_coeffs(1.0, 0.25, 0.5).unwrap()
    }

    #[test]
    fn single_point_grid_is_origin() {
        let p = sample_path(&[0.0], 1).unwrap();
        assert_eq!(p.values(), &[0.0]);
    }

    #[test]
    fn sampling_is_deterministic_and_validated() {
        let g = [0.0, 0.5, 1.0];
        assert_eq!(sample_path(&g, 42).unwrap(), sample_path(&g, 42).unwrap());
        assert_ne!(sample_path(&g, 42).unwrap(), sample_path(&g, 43).unwrap());
        assert!(matches!(
            sample_path(&[0.0, 0.5, 0.5], 1),
            Err(Error::UnsortedGrid { index: 2 })
        ));
        assert!(matches!(sample_path(&[0.1, 0.5], 1), Err(Error::GridStart { .. })));
    }

    #[test]
    fn uniform_grid_ends_exactly() {
        let g = uniform_grid(0.7, 3);
        assert_eq!(g.len(), 4);
        assert_eq!(g[3], 0.7);
        assert_eq!(uniform_span(0.1, 0.3, 7)[7], 0.3);
    }

    #[test]
    fn refinement_keeps_existing_points() {
        let p = sample_path(&uniform_grid(1.0, 8), 3).unwrap();
        let same = refine_path(&p, &[0.25, 0.5], 9).unwrap();
        assert_eq!(same, p);
        let r = refine_path(&p, &[0.3, 0.01, 0.3], 9).unwrap();
        assert_eq!(r.len(), p.len() + 2);
        for (t, w) in p.times().iter().zip(p.values()) {
            assert_eq!(r.value_at(*t).unwrap(), *w);
        }
        assert!(matches!(refine_path(&p, &[1.5], 1), Err(Error::OutOfSpan { .. })));
    }

    #[test]
    fn later_bridge_draws_condition_on_earlier_ones() {
        let p = BrownianPath::new(vec![0.0, 1.0], vec![0.0, 2.0]).unwrap();
        let q = [0.25, 0.5, 0.75];
        let w = bridge_fill(p.segment(), &q, &mut stream(5, Lane::Scratch, &[], 0)).unwrap();
        let mut oracle = PathOracle::new(&p, stream(5, Lane::Scratch, &[], 0));
        let v: Vec<f64> = q.iter().map(|&t| oracle.query(t).unwrap()).collect();
        assert_eq!(w, v);
        assert_eq!(oracle.query(0.5).unwrap(), v[1]);
    }

    #[test]
    fn oracle_bulk_then_point_queries_agree_with_storage() {
        let p = sample_path(&uniform_grid(1.0, 16), 1).unwrap();
        let mut o = PathOracle::new(&p, stream(1, Lane::Refinement, &[], 0));
        let tail = uniform_span(0.3, 1.0, 10);
        let v = o.query_sorted(&tail).unwrap();
        for (t, w) in tail.iter().zip(&v) {
            assert_eq!(o.query(*t).unwrap(), *w);
        }
        assert_eq!(o.query(0.5).unwrap(), p.value_at(0.5).unwrap());
        let a = o.query(0.031).unwrap();
        assert_eq!(o.query(0.031).unwrap(), a);
    }

    #[test]
    fn ito_of_constant_telescopes() {
        let p = sample_path(&uniform_grid(1.0, 64), 7).unwrap();
        let one = SmoothFn::constant(1.0, Support::everywhere());
        let v = ito_deterministic(&p, &one, 0.25, 0.75).unwrap();
        let exact = p.value_at(0.75).unwrap() - p.value_at(0.25).unwrap();
        assert!((v - exact).abs() < 1e-14);
        let zero = SmoothFn::constant(0.0, Support::everywhere());
        assert_eq!(ito_deterministic(&p, &zero, 0.0, 1.0).unwrap(), 0.0);
        assert!(matches!(
            ito_deterministic(&p, &one, 0.3, 0.31),
            Err(Error::InsufficientGrid { .. })
        ));
    }

    #[test]
    fn parts_formula_on_deterministic_surrogate() {
        // w(t) = t, f'(t) = 1 on [0, 1] gives -1/2
        let cs = CoefficientSet::new(
            2.0,
            1.0,
            1.5,
            SmoothFn::affine(-1.0, 1.0, Support::new(0.0, 1.0)),
            SmoothFn::bump(1.0, 1.5, 0.0),
            SmoothFn::right_bump(1.5, 0.0),
        )
        .unwrap();
        let p = BrownianPath::from_fn(uniform_grid(2.0, 200), |t| t).unwrap();
        assert!((x2_via_parts(&p, &cs).unwrap() + 0.5).abs() < 1e-12);
        let z = BrownianPath::zero(uniform_grid(2.0, 200)).unwrap();
        assert_eq!(x2_via_parts(&z, &cs).unwrap(), 0.0);
    }

    #[test]
    fn zero_path_solution() {
        let cs = default_cs();
        let z = BrownianPath::zero(uniform_grid(1.0, 1024)).unwrap();
        let psi = Psi::Constant { value: 1.0 };
        let s = exact_solution(&cs, &psi, &z, 1.0).unwrap();
        assert_eq!((s.x1, s.x2, s.x3), (1.0, 0.0, 0.0));
        assert!((s.x4 - 1000.0).abs() < 1e-6);
        let early = exact_solution(&cs, &psi, &z, 0.2).unwrap();
        assert_eq!((early.x1, early.x3, early.x4), (0.2, 0.0, 0.0));
    }

    #[test]
    fn evaluator_matches_exact_solution() {
        let cs = default_cs();
        let grid = uniform_grid(1.0, 4096);
        let ev = ExactEvaluator::new(&cs, &grid).unwrap();
        let psi = Psi::Affine {
            slope: 3.0,
            intercept: 1.0,
        };
        for seed in 0..4 {
            let p = sample_path(&grid, seed).unwrap();
            let a = ev.solve(&psi, &p);
            let b = exact_solution(&cs, &psi, &p, 1.0).unwrap();
            assert!(a.dist(&b) < 1e-9, "{a:?} vs {b:?}");
            assert!(a.x4.abs() <= ev.gamma());
        }
    }

    #[test]
    fn ito_and_parts_agree_on_fine_grid() {
        let cs = default_cs();
        let grid = uniform_grid(1.0, 1 << 16);
        let p = sample_path(&grid, 11).unwrap();
        let ito = ito_deterministic(&p, cs.f(), 0.0, cs.tau1()).unwrap();
        let parts = x2_via_parts(&p, &cs).unwrap();
        assert!((ito - parts).abs() < 1e-3);
        let ito3 = ito_deterministic(&p, cs.g(), cs.tau1(), cs.tau2()).unwrap();
        assert!((ito3 - x3_via_parts(&p, &cs).unwrap()).abs() < 1e-3);
    }

    #[test]
    fn csv_export_has_header() {
        let p = sample_path(&uniform_grid(1.0, 2), 1).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("t,w\n"));
        assert_eq!(s.lines().count(), 4);
    }
}
