//! The conditional law of `W` given point observations in `(0, delta)` and
//! the tail on `[delta, T]`, and the bridge decomposition of a path.
//!
//! Given sorted sites `s_1 < ... < s_n` in `(0, delta)` with values `y_k`
//! and the tail `v`, set `s_0 = 0`, `y_0 = 0`, `s_{n+1} = delta`,
//! `y_{n+1} = v(delta)`. Conditionally, `W` is the piecewise-linear
//! interpolant `m` plus independent Brownian bridges on each gap:
//!
//! ```text
//! R(r, t) = (s_k - max(r, t)) (min(r, t) - s_{k-1}) / (s_k - s_{k-1})
//! ```
//!
//! for `r, t` in a common gap `[s_{k-1}, s_k]`, and zero otherwise.

use crate::brownian::{bridge_fill, BrownianPath, PathSegment};
use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;
use crate::rng::{stream, Lane};

/// The information available after observing sites in `(0, delta)` and the
/// tail on `[delta, T]`. The tail is represented by samples and read by
/// linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    delta: f64,
    t_end: f64,
    sites: Vec<f64>,
    values: Vec<f64>,
    order: Vec<usize>,
    tail: PathSegment,
    knots: PathSegment,
}

impl ObservationSet {
    /// Sites may come in any order; they are sorted internally and the
    /// permutation is kept. Duplicates are rejected by exact comparison.
    pub fn new(delta: f64, sites: &[f64], values: &[f64], tail: PathSegment) -> Result<Self> {
        if sites.len() != values.len() {
            return Err(Error::invalid("observations", "sites and values differ in length"));
        }
        let (Some(&t_lo), Some(&t_end)) = (tail.times().first(), tail.times().last()) else {
            return Err(Error::invalid("tail", "empty"));
        };
        if t_lo != delta || !(delta > 0.0) {
            return Err(Error::invalid(
                "tail",
                format!("must start at delta = {delta}, starts at {t_lo}"),
            ));
        }
        for &s in sites {
            if !(0.0 < s && s < delta) {
                return Err(Error::SiteOutOfRange { site: s, delta });
            }
        }
        let mut order: Vec<usize> = (0..sites.len()).collect();
        order.sort_by(|&i, &j| sites[i].total_cmp(&sites[j]));
        let sorted: Vec<f64> = order.iter().map(|&i| sites[i]).collect();
        let vals: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateSite { site: w[0] });
        }
        let mut kt = Vec::with_capacity(sorted.len() + 2);
        let mut kv = Vec::with_capacity(sorted.len() + 2);
        kt.push(0.0);
        kv.push(0.0);
        kt.extend_from_slice(&sorted);
        kv.extend_from_slice(&vals);
        kt.push(delta);
        kv.push(tail.values()[0]);
        Ok(ObservationSet {
            delta,
            t_end,
            sites: sorted,
            values: vals,
            order,
            tail,
            knots: PathSegment::new(kt, kv)?,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn t_end(&self) -> f64 {
        self.t_end
    }
    /// Sites in increasing order.
    pub fn sites(&self) -> &[f64] {
        &self.sites
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    /// `order[k]` is the input position of the `k`-th smallest site.
    pub fn order(&self) -> &[usize] {
        &self.order
    }
    pub fn tail(&self) -> &PathSegment {
        &self.tail
    }
    /// `(0, 0)`, the sorted observations and `(delta, v(delta))`.
    pub fn knots(&self) -> &PathSegment {
        &self.knots
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if 0.0 <= t && t <= self.t_end {
            Ok(())
        } else {
            Err(Error::OutOfSpan {
                t,
                lo: 0.0,
                hi: self.t_end,
            })
        }
    }

    /// Gap `[s_{k-1}, s_k]` with `s_{k-1} < t < s_k`, or `None` when `t` is
    /// observed.
    fn gap(&self, t: f64) -> Option<usize> {
        if t >= self.delta {
            return None;
        }
        let k = self.knots.times().partition_point(|&s| s <= t);
        (self.knots.times()[k - 1] != t).then_some(k)
    }
}

pub fn conditional_mean(obs: &ObservationSet, t: f64) -> Result<f64> {
    obs.check_time(t)?;
    Ok(if t >= obs.delta {
        obs.tail.interp(t)
    } else {
        obs.knots.interp(t)
    })
}

pub fn conditional_cov(obs: &ObservationSet, r: f64, t: f64) -> Result<f64> {
    obs.check_time(r)?;
    obs.check_time(t)?;
    match (obs.gap(r), obs.gap(t)) {
        (Some(i), Some(j)) if i == j => {
            let (lo, hi) = (obs.knots.times()[i - 1], obs.knots.times()[i]);
            Ok((hi - r.max(t)) * (r.min(t) - lo) / (hi - lo))
        }
        _ => Ok(0.0),
    }
}

/// Draw from the conditional law on a sorted `grid` in `[0, T]`.
/// Observed times return their values verbatim.
pub fn sample_conditional(obs: &ObservationSet, grid: &[f64], seed: u64) -> Result<PathSegment> {
    for &t in grid {
        obs.check_time(t)?;
    }
    let split = grid.partition_point(|&t| t < obs.delta);
    let mut rng = stream(seed, Lane::Conditional, &[], 0);
    let mut values = bridge_fill(&obs.knots, &grid[..split], &mut rng)?;
    values.extend(grid[split..].iter().map(|&t| obs.tail.interp(t)));
    PathSegment::new(grid.to_vec(), values)
}

/// A path split at `t0 < t1` into its values outside `(t0, t1)` and the
/// bridge `B(t) = w(t) - (t1 - t)/(t1 - t0) w(t0) - (t - t0)/(t1 - t0) w(t1)`
/// on `[t0, t1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgeDecomposition {
    pub t0: f64,
    pub t1: f64,
    pub w0: f64,
    pub w1: f64,
    /// Grid samples outside `(t0, t1)`, verbatim.
    pub outer: PathSegment,
    /// `B` at the grid points of `[t0, t1]`.
    pub bridge: PathSegment,
}

impl BridgeDecomposition {
    /// `w(t)` for `t` a grid point of `[t0, t1]`, rebuilt from `B` and the
    /// endpoint values.
    pub fn reconstruct(&self, k: usize) -> f64 {
        let t = self.bridge.times()[k];
        let lam = (t - self.t0) / (self.t1 - self.t0);
        self.bridge.values()[k] + (1.0 - lam) * self.w0 + lam * self.w1
    }
}

/// Splits `path` at the grid times `t0 < t1`.
pub fn bridge_decompose(path: &BrownianPath, t0: f64, t1: f64) -> Result<BridgeDecomposition> {
    if !(t0 < t1) {
        return Err(Error::invalid("t0", format!("need t0 < t1, got {t0} >= {t1}")));
    }
    let w0 = path.value_at(t0)?;
    let w1 = path.value_at(t1)?;
    let seg = path.segment();
    let (mut ot, mut ov) = (Vec::new(), Vec::new());
    let (mut bt, mut bv) = (Vec::new(), Vec::new());
    for (&t, &w) in seg.times().iter().zip(seg.values()) {
        if t <= t0 || t >= t1 {
            ot.push(t);
            ov.push(w);
        }
        if t0 <= t && t <= t1 {
            let b = if t == t0 || t == t1 {
                0.0
            } else {
                w - (t1 - t) / (t1 - t0) * w0 - (t - t0) / (t1 - t0) * w1
            };
            bt.push(t);
            bv.push(b);
        }
    }
    Ok(BridgeDecomposition {
        t0,
        t1,
        w0,
        w1,
        outer: PathSegment::new(ot, ov)?,
        bridge: PathSegment::new(bt, bv)?,
    })
}

/// `Var(∫_{t0}^{t1} phi'(t) B(t) dt)` for a bridge `B` on `[t0, t1]`, by
/// double quadrature of `phi'(r) phi'(t) R(r, t)`.
pub fn bridge_functional_variance<F: Fn(f64) -> f64>(fprime: F, t0: f64, t1: f64, quad_tol: f64) -> Result<f64> {
    if !(t0 < t1) {
        return Err(Error::invalid("t0", "need t0 < t1"));
    }
    let len = t1 - t0;
    // symmetric kernel: twice the integral over r <= t
    let inner_tol = quad_tol / len.max(1.0);
    let outer = |t: f64| -> f64 {
        if t <= t0 {
            return 0.0;
        }
        let inner = adaptive_simpson(|r| fprime(r) * (r - t0), t0, t, inner_tol).unwrap_or(f64::NAN);
        fprime(t) * (t1 - t) * inner / len
    };
    let v = 2.0 * adaptive_simpson(outer, t0, t1, quad_tol)?;
    if !v.is_finite() {
        return Err(Error::Quadrature {
            a: t0,
            b: t1,
            tol: quad_tol,
        });
    }
    Ok(v)
}

/// The same variance as `∫_{t0}^{t1} (phi - mean(phi))^2`, where `phi` is an
/// antiderivative of the integrand.
pub fn bridge_functional_variance_by_parts<F: Fn(f64) -> f64>(phi: F, t0: f64, t1: f64, quad_tol: f64) -> Result<f64> {
    if !(t0 < t1) {
        return Err(Error::invalid("t0", "need t0 < t1"));
    }
    let mean = adaptive_simpson(&phi, t0, t1, quad_tol)? / (t1 - t0);
    adaptive_simpson(|t| (phi(t) - mean).powi(2), t0, t1, quad_tol)
}
