//! Adaptive approximation schemes: sequential site selection in
//! `(0, delta)`, a stopping rule, and an estimator of `X(T)` from the
//! observed sites and the tail of the path on `[delta, T]`.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::brownian::{
    sample_path_with, uniform_grid, uniform_span, BrownianPath, PathOracle, PathSegment, SolutionVec, GAMMA_TOL,
};
use crate::coeffs::CoefficientSet;
use crate::error::{Error, Result};
use crate::psi::Psi;
use crate::quad::adaptive_simpson;
use crate::rng::{stream, Lane, StreamRng};
use crate::stats::{mean_se, median, MeanSe};

/// The SDE instance a scheme approximates: coefficients, `psi`, and the
/// cached value of `∫_{tau2}^T h`.
#[derive(Debug, Clone)]
pub struct Problem {
    cs: CoefficientSet,
    psi: Psi,
    gamma: f64,
}

impl Problem {
    pub fn new(cs: CoefficientSet, psi: Psi) -> Result<Arc<Self>> {
        let h = cs.h();
        let gamma = adaptive_simpson(|s| h.eval(s), cs.tau2(), cs.t_end(), GAMMA_TOL)?;
        Ok(Arc::new(Problem { cs, psi, gamma }))
    }
    pub fn cs(&self) -> &CoefficientSet {
        &self.cs
    }
    pub fn psi(&self) -> &Psi {
        &self.psi
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// Everything observed so far: the tail and the sites in selection order.
#[derive(Debug, Clone)]
pub struct History {
    delta: f64,
    sites: Vec<f64>,
    values: Vec<f64>,
    tail: PathSegment,
}

impl History {
    pub fn new(delta: f64, tail: PathSegment) -> Self {
        History {
            delta,
            sites: Vec::new(),
            values: Vec::new(),
            tail,
        }
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn nu(&self) -> usize {
        self.sites.len()
    }
    pub fn sites(&self) -> &[f64] {
        &self.sites
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn tail(&self) -> &PathSegment {
        &self.tail
    }
    pub fn push(&mut self, site: f64, value: f64) {
        self.sites.push(site);
        self.values.push(value);
    }

    /// `(0, 0)`, the observations sorted by site, then the tail.
    pub fn knots(&self) -> (Vec<f64>, Vec<f64>) {
        let mut idx: Vec<usize> = (0..self.sites.len()).collect();
        idx.sort_by(|&i, &j| self.sites[i].total_cmp(&self.sites[j]));
        let n = idx.len() + 1 + self.tail.len();
        let (mut t, mut w) = (Vec::with_capacity(n), Vec::with_capacity(n));
        t.push(0.0);
        w.push(0.0);
        for i in idx {
            t.push(self.sites[i]);
            w.push(self.values[i]);
        }
        t.extend_from_slice(self.tail.times());
        w.extend_from_slice(self.tail.values());
        (t, w)
    }
}

/// A member of the approximation class: site rule, stopping rule,
/// estimator. Implementations must be deterministic given the history and
/// the estimator stream.
pub trait AdaptiveScheme: Send + Sync {
    fn name(&self) -> &str;

    /// Tail times the estimator needs besides the declared tail grid.
    fn extra_tail_times(&self, _delta: f64, _t_end: f64) -> Vec<f64> {
        Vec::new()
    }

    fn next_site(&self, history: &History) -> f64;

    fn should_stop(&self, history: &History) -> bool;

    fn estimate(&self, history: &History, rng: &mut StreamRng) -> Result<SolutionVec>;

    /// `nu` when it does not depend on the path.
    fn fixed_cost(&self, _delta: f64) -> Option<usize> {
        None
    }
}

/// Protocol settings shared by all schemes in one experiment cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunSettings {
    pub delta: f64,
    /// Number of uniform points of the tail grid on `[delta, T]`.
    pub tail_points: usize,
    pub nu_cap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub nu: usize,
    pub estimate: SolutionVec,
    pub sites: Vec<f64>,
}

/// Sorted union of the tail grid and a scheme's extra tail times.
pub fn tail_times(settings: &RunSettings, t_end: f64, extra: &[f64]) -> Vec<f64> {
    let mut t = uniform_span(settings.delta, t_end, settings.tail_points.max(2) - 1);
    t.extend(extra.iter().copied().filter(|&s| settings.delta <= s && s <= t_end));
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

/// Runs the information protocol on `path`, answering off-grid queries by
/// bridge refinement from `refine_rng`.
pub fn run_scheme_with(
    scheme: &dyn AdaptiveScheme,
    settings: &RunSettings,
    path: &BrownianPath,
    refine_rng: StreamRng,
    estimate_rng: &mut StreamRng,
) -> Result<RunRecord> {
    let RunSettings { delta, nu_cap, .. } = *settings;
    let t_end = path.t_last();
    if !(delta > 0.0 && delta < t_end) {
        return Err(Error::invalid("delta", format!("{delta} not in (0, {t_end})")));
    }
    if nu_cap == 0 {
        return Err(Error::invalid("nu_cap", "must be at least 1"));
    }
    let mut oracle = PathOracle::new(path, refine_rng);
    let times = tail_times(settings, t_end, &scheme.extra_tail_times(delta, t_end));
    let values = oracle.query_sorted(&times)?;
    let mut history = History::new(delta, PathSegment::new(times, values)?);
    loop {
        if history.nu() == nu_cap {
            return Err(Error::NuCapExceeded { cap: nu_cap });
        }
        let s = scheme.next_site(&history);
        if !(0.0 < s && s < delta) {
            return Err(Error::SiteOutOfRange { site: s, delta });
        }
        if history.sites.contains(&s) {
            return Err(Error::DuplicateSite { site: s });
        }
        let y = oracle.query(s)?;
        history.push(s, y);
        if scheme.should_stop(&history) {
            break;
        }
    }
    let estimate = scheme.estimate(&history, estimate_rng)?;
    if !estimate.is_finite() {
        return Err(Error::NonFinite(format!("estimate of {}", scheme.name())));
    }
    Ok(RunRecord {
        nu: history.nu(),
        estimate,
        sites: history.sites,
    })
}

/// [`run_scheme_with`] with both streams derived from `seed`.
pub fn run_scheme(
    scheme: &dyn AdaptiveScheme,
    settings: &RunSettings,
    path: &BrownianPath,
    seed: u64,
) -> Result<RunRecord> {
    let refine = stream(seed, Lane::Refinement, &[], 0);
    let mut est = stream(seed, Lane::InnerMonteCarlo, &[], 0);
    run_scheme_with(scheme, settings, path, refine, &mut est)
}

/// Monte Carlo estimate of `E[nu]` over `trials` paths on a `2^grid_exp`
/// uniform grid of `[0, T]`.
pub fn cost(
    scheme: &dyn AdaptiveScheme,
    settings: &RunSettings,
    t_end: f64,
    grid_exp: u32,
    trials: usize,
    master_seed: u64,
) -> Result<MeanSe> {
    if trials == 0 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    let grid = uniform_grid(t_end, 1 << grid_exp);
    let mut nus = Vec::with_capacity(trials);
    for i in 0..trials as u64 {
        let path = sample_path_with(&grid, &mut stream(master_seed, Lane::MasterPath, &[], i))?;
        let rec = run_scheme(
            scheme,
            settings,
            &path,
            master_seed ^ i.wrapping_mul(0x9E37_79B9_7F4A_7C15),
        )?;
        nus.push(rec.nu as f64);
    }
    Ok(mean_se(&nus))
}

/// Euler–Maruyama for the four-dimensional system on samples `(t_k, W(t_k))`
/// with `t_0 = 0`.
pub fn euler_on_samples(problem: &Problem, times: &[f64], values: &[f64]) -> SolutionVec {
    let cs = &problem.cs;
    let (f, g, h) = (cs.f(), cs.g(), cs.h());
    let (mut x2, mut x3, mut x4) = (0.0, 0.0, 0.0);
    for k in 0..times.len().saturating_sub(1) {
        let t = times[k];
        let dt = times[k + 1] - t;
        let dw = values[k + 1] - values[k];
        let hv = h.eval(t);
        if hv != 0.0 {
            x4 += hv * (x2 * problem.psi.eval(x3)).cos() * dt;
        }
        x2 += f.eval(t) * dw;
        x3 += g.eval(t) * dw;
    }
    SolutionVec {
        x1: *times.last().unwrap_or(&0.0),
        x2,
        x3,
        x4,
    }
}

/// Euler–Maruyama with `n` equidistant steps on `[0, T]`. The grid points
/// below `delta` are the sites; those above are read from the tail.
#[derive(Debug, Clone)]
pub struct EulerEquidistant {
    problem: Arc<Problem>,
    n: usize,
    name: String,
}

impl EulerEquidistant {
    pub fn new(problem: Arc<Problem>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "must be at least 1"));
        }
        Ok(EulerEquidistant {
            problem,
            n,
            name: "euler_equidistant".into(),
        })
    }

    fn point(&self, k: usize) -> f64 {
        if k == self.n {
            self.problem.cs.t_end()
        } else {
            k as f64 * self.problem.cs.t_end() / self.n as f64
        }
    }

    /// Number of grid points in `(0, delta)`.
    fn inner_count(&self, delta: f64) -> usize {
        (1..=self.n).take_while(|&k| self.point(k) < delta).count()
    }
}

impl AdaptiveScheme for EulerEquidistant {
    fn name(&self) -> &str {
        &self.name
    }

    fn extra_tail_times(&self, delta: f64, _t_end: f64) -> Vec<f64> {
        (0..=self.n).map(|k| self.point(k)).filter(|&t| t >= delta).collect()
    }

    fn next_site(&self, h: &History) -> f64 {
        // with no grid point below delta, one placeholder observation keeps nu >= 1
        if self.inner_count(h.delta) == 0 {
            0.5 * h.delta
        } else {
            self.point(h.nu() + 1)
        }
    }

    fn should_stop(&self, h: &History) -> bool {
        h.nu() >= self.inner_count(h.delta).max(1)
    }

    fn estimate(&self, h: &History, _rng: &mut StreamRng) -> Result<SolutionVec> {
        let inner = self.inner_count(h.delta);
        let mut times = Vec::with_capacity(self.n + 1);
        let mut values = Vec::with_capacity(self.n + 1);
        for k in 0..=self.n {
            let t = self.point(k);
            let w = if k == 0 {
                0.0
            } else if k <= inner {
                h.values[k - 1]
            } else {
                let i = h.tail.index_of(t).ok_or(Error::NotAGridPoint { t })?;
                h.tail.values()[i]
            };
            times.push(t);
            values.push(w);
        }
        Ok(euler_on_samples(&self.problem, &times, &values))
    }

    fn fixed_cost(&self, delta: f64) -> Option<usize> {
        Some(self.inner_count(delta).max(1))
    }
}

/// Bisects the gap with the largest `|increment| * sqrt(gap)` among the
/// gaps between `(0, 0)`, the observed sites and `(delta, W(delta))`, then
/// applies Euler on the induced grid and the tail.
#[derive(Debug, Clone)]
pub struct GapRefiner {
    problem: Arc<Problem>,
    budget: usize,
    name: String,
}

impl GapRefiner {
    pub fn new(problem: Arc<Problem>, budget: usize) -> Result<Self> {
        if budget < 1 {
            return Err(Error::invalid("budget", "must be at least 1"));
        }
        Ok(GapRefiner {
            problem,
            budget,
            name: "adaptive_gap_refiner".into(),
        })
    }
}

impl AdaptiveScheme for GapRefiner {
    fn name(&self) -> &str {
        &self.name
    }

    fn next_site(&self, h: &History) -> f64 {
        let (t, w) = h.knots();
        let m = h.nu() + 2;
        let (mut best, mut best_score) = (0usize, f64::NEG_INFINITY);
        let (mut widest, mut widest_len) = (0usize, f64::NEG_INFINITY);
        for k in 1..m {
            let len = t[k] - t[k - 1];
            let score = (w[k] - w[k - 1]).abs() * len.sqrt();
            if score > best_score {
                best = k;
                best_score = score;
            }
            if len > widest_len {
                widest = k;
                widest_len = len;
            }
        }
        let k = if best_score > 0.0 { best } else { widest };
        0.5 * (t[k - 1] + t[k])
    }

    fn should_stop(&self, h: &History) -> bool {
        h.nu() >= self.budget
    }

    fn estimate(&self, h: &History, _rng: &mut StreamRng) -> Result<SolutionVec> {
        let (t, w) = h.knots();
        Ok(euler_on_samples(&self.problem, &t, &w))
    }

    fn fixed_cost(&self, _delta: f64) -> Option<usize> {
        Some(self.budget)
    }
}

/// How a fixed-site scheme turns its observations into an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Euler on `{0} ∪ sites ∪ tail`.
    InducedEuler,
    /// Conditional mean of `X(T)` by `inner_mc` draws from the conditional law.
    ConditionalMean { inner_mc: usize },
    /// Componentwise conditional median, the L¹-optimal variant.
    ConditionalMedian { inner_mc: usize },
}

/// Observes `sites` in order and stops after the last one.
#[derive(Debug, Clone)]
pub struct FixedSites {
    problem: Arc<Problem>,
    sites: Vec<f64>,
    estimator: Estimator,
    name: String,
}

impl FixedSites {
    pub fn new(problem: Arc<Problem>, sites: Vec<f64>, estimator: Estimator) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::invalid("sites", "at least one site is required"));
        }
        match estimator {
            Estimator::ConditionalMean { inner_mc } | Estimator::ConditionalMedian { inner_mc } if inner_mc == 0 => {
                return Err(Error::invalid("inner_mc", "must be at least 1"));
            }
            _ => {}
        }
        let name = match estimator {
            Estimator::InducedEuler => "fixed_sites_euler",
            Estimator::ConditionalMean { .. } => "conditional_mean_estimator",
            Estimator::ConditionalMedian { .. } => "conditional_median_estimator",
        };
        Ok(FixedSites {
            problem,
            sites,
            estimator,
            name: name.into(),
        })
    }

    /// `n` equidistant sites `k delta / (n + 1)`.
    pub fn equidistant(problem: Arc<Problem>, delta: f64, n: usize, estimator: Estimator) -> Result<Self> {
        let sites = (1..=n).map(|k| k as f64 * delta / (n + 1) as f64).collect();
        FixedSites::new(problem, sites, estimator)
    }

    pub fn sites(&self) -> &[f64] {
        &self.sites
    }
}

impl AdaptiveScheme for FixedSites {
    fn name(&self) -> &str {
        &self.name
    }

    fn next_site(&self, h: &History) -> f64 {
        self.sites[h.nu()]
    }

    fn should_stop(&self, h: &History) -> bool {
        h.nu() >= self.sites.len()
    }

    fn estimate(&self, h: &History, rng: &mut StreamRng) -> Result<SolutionVec> {
        match self.estimator {
            Estimator::InducedEuler => {
                let (t, w) = h.knots();
                Ok(euler_on_samples(&self.problem, &t, &w))
            }
            Estimator::ConditionalMean { inner_mc } => {
                let law = ConditionalLaw::new(&self.problem, h)?;
                let draws = law.x4_draws(&self.problem, inner_mc, rng);
                Ok(law.estimate(&self.problem, draws.iter().sum::<f64>() / inner_mc as f64))
            }
            Estimator::ConditionalMedian { inner_mc } => {
                let law = ConditionalLaw::new(&self.problem, h)?;
                let mut draws = law.x4_draws(&self.problem, inner_mc, rng);
                Ok(law.estimate(&self.problem, median(&mut draws)))
            }
        }
    }

    fn fixed_cost(&self, _delta: f64) -> Option<usize> {
        Some(self.sites.len())
    }
}

/// Three-point Gauss–Legendre rule on `[a, b]`.
fn gauss3<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    const X: f64 = 0.774_596_669_241_483_4;
    let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
    r * (5.0 * f(m - r * X) + 8.0 * f(m) + 5.0 * f(m + r * X)) / 9.0
}

/// The bivariate Gaussian law of `(X2(tau1), X3(tau2))` given a history.
///
/// On each gap `[s_{k-1}, s_k]` below `delta`, `W` is the chord plus an
/// independent bridge, so `∫ phi dW` has mean `∑ slope_k ∫_gap phi` and
/// covariance `∑ ∫_gap (phi - mean phi)(chi - mean chi)`. The tail is read
/// as piecewise linear and contributes to the mean only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalLaw {
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
}

impl ConditionalLaw {
    pub fn new(problem: &Problem, h: &History) -> Result<Self> {
        let cs = &problem.cs;
        let (tau1, tau2) = (cs.tau1(), cs.tau2());
        let phi = |t: f64| if (0.0..=tau1).contains(&t) { cs.f().eval(t) } else { 0.0 };
        let chi = |t: f64| {
            if (tau1..=tau2).contains(&t) {
                cs.g().eval(t)
            } else {
                0.0
            }
        };
        // integrals over [a, b] split at the indicator edges so each piece is smooth
        let split = |a: f64, b: f64, rule: &dyn Fn(f64, f64) -> Result<f64>| -> Result<f64> {
            let mut cuts = vec![a];
            cuts.extend([tau1, tau2].into_iter().filter(|&c| a < c && c < b));
            cuts.push(b);
            cuts.windows(2).map(|w| rule(w[0], w[1])).sum()
        };
        let (t, w) = h.knots();
        let head = h.nu() + 2;
        let (mut m2, mut m3) = (0.0, 0.0);
        let (mut v22, mut v33, mut v23) = (0.0, 0.0, 0.0);
        let tol = 1e-13;
        for k in 1..t.len() {
            let (a, b) = (t[k - 1], t[k]);
            let slope = (w[k] - w[k - 1]) / (b - a);
            let (i2, i3) = if k < head {
                (
                    split(a, b, &|x, y| adaptive_simpson(phi, x, y, tol))?,
                    split(a, b, &|x, y| adaptive_simpson(chi, x, y, tol))?,
                )
            } else {
                let gl2 = if a < tau1 { gauss3(phi, a, b.min(tau1)) } else { 0.0 };
                let gl3 = if b > tau1 && a < tau2 {
                    gauss3(chi, a.max(tau1), b.min(tau2))
                } else {
                    0.0
                };
                (gl2, gl3)
            };
            m2 += slope * i2;
            m3 += slope * i3;
            if k < head {
                let (p, c) = (i2 / (b - a), i3 / (b - a));
                if i2 != 0.0 || phi(a) != 0.0 || phi(b) != 0.0 {
                    v22 += split(a, b, &|x, y| adaptive_simpson(|s| (phi(s) - p).powi(2), x, y, tol))?;
                }
                if i3 != 0.0 || chi(a) != 0.0 || chi(b) != 0.0 {
                    v33 += split(a, b, &|x, y| adaptive_simpson(|s| (chi(s) - c).powi(2), x, y, tol))?;
                    v23 += split(a, b, &|x, y| {
                        adaptive_simpson(|s| (phi(s) - p) * (chi(s) - c), x, y, tol)
                    })?;
                }
            }
        }
        Ok(ConditionalLaw {
            mean: [m2, m3],
            cov: [[v22, v23], [v23, v33]],
        })
    }

    /// One draw of `(X2, X3)`.
    pub fn draw(&self, rng: &mut StreamRng) -> (f64, f64) {
        let [[a, b], [_, c]] = self.cov;
        let l11 = a.max(0.0).sqrt();
        let l21 = if l11 > 0.0 { b / l11 } else { 0.0 };
        let l22 = (c - l21 * l21).max(0.0).sqrt();
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        (self.mean[0] + l11 * z1, self.mean[1] + l21 * z1 + l22 * z2)
    }

    /// `inner_mc` draws of `gamma cos(X2 psi(X3))`.
    pub fn x4_draws(&self, problem: &Problem, inner_mc: usize, rng: &mut StreamRng) -> Vec<f64> {
        (0..inner_mc)
            .map(|_| {
                let (x2, x3) = self.draw(rng);
                problem.gamma * (x2 * problem.psi.eval(x3)).cos()
            })
            .collect()
    }

    fn estimate(&self, problem: &Problem, x4: f64) -> SolutionVec {
        SolutionVec {
            x1: problem.cs.t_end(),
            x2: self.mean[0],
            x3: self.mean[1],
            x4,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brownian::sample_path;
    use crate::coeffs::make_default_coeffs;

    fn problem(psi: Psi) -> Arc<Problem> {
        Problem::new(make_default_coeffs(1.0, 0.25, 0.5).unwrap(), psi).unwrap()
    }

    fn settings(delta: f64) -> RunSettings {
        RunSettings {
            delta,
            tail_points: 257,
            nu_cap: 1000,
        }
    }

    struct Never;
    impl AdaptiveScheme for Never {
        fn name(&self) -> &str {
            "never"
        }
        fn next_site(&self, h: &History) -> f64 {
            h.delta * (1.0 - 0.5f64.powi(h.nu() as i32 + 1))
        }
        fn should_stop(&self, _: &History) -> bool {
            false
        }
        fn estimate(&self, _: &History, _: &mut StreamRng) -> Result<SolutionVec> {
            Ok(SolutionVec::default())
        }
    }

    struct Repeats;
    impl AdaptiveScheme for Repeats {
        fn name(&self) -> &str {
            "repeats"
        }
        fn next_site(&self, h: &History) -> f64 {
            0.5 * h.delta
        }
        fn should_stop(&self, h: &History) -> bool {
            h.nu() == 2
        }
        fn estimate(&self, _: &History, _: &mut StreamRng) -> Result<SolutionVec> {
            Ok(SolutionVec::default())
        }
    }

    #[test]
    fn cap_and_duplicate_contracts() {
        let p = sample_path(&uniform_grid(1.0, 256), 1).unwrap();
        let mut s = settings(0.1);
        s.nu_cap = 7;
        assert!(matches!(
            run_scheme(&Never, &s, &p, 0),
            Err(Error::NuCapExceeded { cap: 7 })
        ));
        assert!(matches!(
            run_scheme(&Repeats, &s, &p, 0),
            Err(Error::DuplicateSite { .. })
        ));
    }

    #[test]
    fn fixed_sites_are_observed_in_order() {
        let pr = problem(Psi::Constant { value: 1.0 });
        let p = sample_path(&uniform_grid(1.0, 256), 2).unwrap();
        let sch = FixedSites::new(pr, vec![0.05, 0.01, 0.07], Estimator::InducedEuler).unwrap();
        let r = run_scheme(&sch, &settings(0.1), &p, 3).unwrap();
        assert_eq!(r.nu, 3);
        assert_eq!(r.sites, vec![0.05, 0.01, 0.07]);
        assert_eq!(r, run_scheme(&sch, &settings(0.1), &p, 3).unwrap());
        assert!(matches!(
            run_scheme(&sch, &settings(0.06), &p, 3),
            Err(Error::SiteOutOfRange { .. })
        ));
    }

    #[test]
    fn euler_on_zero_path_is_riemann_sum_of_h() {
        let pr = problem(Psi::Constant { value: 1.0 });
        let n = 64;
        let grid = uniform_grid(1.0, n);
        let z: Vec<f64> = vec![0.0; n + 1];
        let s = euler_on_samples(&pr, &grid, &z);
        let riemann: f64 = (0..n).map(|k| pr.cs().h().eval(grid[k]) / n as f64).sum();
        assert_eq!(s.x4, riemann);
        assert_eq!((s.x1, s.x2, s.x3), (1.0, 0.0, 0.0));
        let one = euler_on_samples(&pr, &[0.0, 1.0], &[0.0, 0.3]);
        assert_eq!(one.x1, 1.0);
    }

    #[test]
    fn euler_scheme_cost_and_consistency() {
        let pr = problem(Psi::Constant { value: 1.0 });
        let grid = uniform_grid(1.0, 1024);
        let p = sample_path(&grid, 4).unwrap();
        let e = EulerEquidistant::new(pr.clone(), 64).unwrap();
        let r = run_scheme(&e, &settings(0.1), &p, 1).unwrap();
        // k/64 < 0.1 for k = 1..=6
        assert_eq!(r.nu, 6);
        assert_eq!(e.fixed_cost(0.1), Some(6));
        // on grid points the scheme sees the master path itself
        let direct = euler_on_samples(&pr, &uniform_grid(1.0, 64), p.subsample(16).values());
        assert!(r.estimate.dist(&direct) < 1e-12);
        let coarse = EulerEquidistant::new(pr, 1).unwrap();
        let r = run_scheme(&coarse, &settings(0.1), &p, 1).unwrap();
        assert_eq!((r.nu, r.estimate.x1), (1, 1.0));
    }

    #[test]
    fn gap_refiner_first_site_and_ties() {
        let pr = problem(Psi::Constant { value: 1.0 });
        let g = GapRefiner::new(pr, 2).unwrap();
        let p = sample_path(&uniform_grid(1.0, 256), 5).unwrap();
        let r = run_scheme(&g, &settings(0.1), &p, 1).unwrap();
        assert_eq!(r.nu, 2);
        assert_eq!(r.sites[0], 0.05);
        let flat = PathSegment::new(uniform_span(0.5, 1.0, 4), vec![0.0; 5]).unwrap();
        let mut h = History::new(0.5, flat);
        h.push(0.25, 0.0);
        h.push(0.125, 0.0);
        // gaps 1/8, 1/8, 1/4: the widest is the last
        assert_eq!(g.next_site(&h), 0.375);
        h.push(0.375, 0.0);
        // four equal gaps: leftmost wins
        assert_eq!(g.next_site(&h), 0.0625);
    }

    #[test]
    fn conditional_law_with_no_information_is_prior() {
        let pr = problem(Psi::Constant { value: 1.0 });
        // tail starting at tau2 leaves X2 and X3 fully unobserved
        let tail = PathSegment::new(uniform_span(0.5, 1.0, 8), vec![0.0; 9]).unwrap();
        let mut h = History::new(0.5, tail);
        h.push(0.25, 0.0);
        let law = ConditionalLaw::new(&pr, &h).unwrap();
        let cs = pr.cs();
        let f2 = adaptive_simpson(|t| cs.f().eval(t).powi(2), 0.0, 0.25, 1e-14).unwrap();
        let f1 = adaptive_simpson(|t| cs.f().eval(t), 0.0, 0.25, 1e-14).unwrap();
        // W(0) = W(1/4) = 0 pins the bridge; the variance loses the mean part
        assert!((law.cov[0][0] - (f2 - f1 * f1 / 0.25)).abs() < 1e-10);
        assert_eq!(law.mean, [0.0, 0.0]);
        let v_beta = law.cov[1][1];
        assert!(v_beta > 0.0 && v_beta < 2.0);
    }

    #[test]
    fn conditional_mean_matches_closed_form_when_x3_is_known() {
        let pr = problem(Psi::Constant { value: 3.0 });
        let p = sample_path(&uniform_grid(1.0, 1024), 9).unwrap();
        let sch =
            FixedSites::equidistant(pr.clone(), 0.05, 4, Estimator::ConditionalMean { inner_mc: 40_000 }).unwrap();
        let r = run_scheme(&sch, &settings(0.05), &p, 2).unwrap();
        let mut o = PathOracle::new(&p, stream(2, Lane::Refinement, &[], 0));
        let tt = tail_times(&settings(0.05), 1.0, &[]);
        let tv = o.query_sorted(&tt).unwrap();
        let mut h = History::new(0.05, PathSegment::new(tt, tv).unwrap());
        for &s in sch.sites() {
            h.push(s, o.query(s).unwrap());
        }
        let law = ConditionalLaw::new(&pr, &h).unwrap();
        assert_eq!(law.cov[1][1], 0.0);
        let exact = pr.gamma() * (3.0 * law.mean[0]).cos() * (-4.5 * law.cov[0][0]).exp();
        assert!((r.estimate.x4 - exact).abs() < 4.0 * pr.gamma() / 200.0);
        assert_eq!(r.estimate.x2, law.mean[0]);
    }

    #[test]
    fn cost_of_deterministic_schemes() {
        let pr = problem(Psi::Constant { value: 1.0 });
        let g = GapRefiner::new(pr, 5).unwrap();
        let c = cost(&g, &settings(0.1), 1.0, 8, 20, 1).unwrap();
        assert_eq!((c.mean, c.se), (5.0, 0.0));
    }
}
