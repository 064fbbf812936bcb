//! The glued function `psi` built from a target error sequence.
//!
//! Given target errors `a_N` and interval lengths `delta_N`, the knots are
//!
//! ```text
//! b_N = sqrt(-beta ln((a_N + c2/N) / c1))
//! d_N = (1 + sqrt(96 / (alpha min(delta_N, tau1/2)^3))) N^3        N >= N0
//! ```
//!
//! and `psi` is `d_N0 (1 - exp(1/(x - b_N0)))` left of the first knot, `d_N` at
//! the knots, and a logistic bridge
//!
//! ```text
//! d_{N-1} + (d_N - d_{N-1}) / (1 + exp(1/(x - b_{N-1}) - 1/(b_N - x)))
//! ```
//!
//! between consecutive knots. Beyond the last stored knot it continues as
//! `d_last + s u exp(-1/u)`, `u = x - b_last`, which is flat to all orders
//! at the knot and grows with the slope `s` of the last secant.
//!
//! In floating point the bridges are flat to machine precision close to each
//! knot, so `psi` is only non-decreasing there; it is strictly increasing
//! wherever the increments are representable.

use serde::{Deserialize, Serialize};

use crate::coeffs::DerivedConstants;
use crate::error::{Error, Result};

/// Exponent arguments are clamped to `[-EXP_CLAMP, EXP_CLAMP]`.
pub const EXP_CLAMP: f64 = 700.0;

/// Relative tie tolerance for recognising a knot.
pub const KNOT_TIE: f64 = 1e-15;

/// Absolute bisection tolerance of `psi^{-1}` (relative for `|x| > 1`).
pub const INV_TOL: f64 = 1e-12;

/// Variables available to rate-plan expressions besides `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanVars {
    pub t_end: f64,
    pub tau1: f64,
    pub tau2: f64,
}

/// Target error sequence `a_N` and interval sequence `delta_N`, stored as a
/// finite prefix `N = 1..=len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePlan {
    a: Vec<f64>,
    delta: Vec<f64>,
}

impl RatePlan {
    /// Validates and stores the prefixes. `a` must be positive and strictly
    /// decreasing, `delta` must lie in `(0, t_end]` and be non-increasing.
    pub fn new(a: Vec<f64>, delta: Vec<f64>, t_end: f64) -> Result<Self> {
        if a.is_empty() || a.len() != delta.len() {
            return Err(Error::invalid(
                "plan",
                "a and delta must be non-empty and of equal length",
            ));
        }
        for (k, &v) in a.iter().enumerate() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid("plan.a", format!("a_{} = {v} is not positive", k + 1)));
            }
            if k > 0 && !(v < a[k - 1]) {
                return Err(Error::invalid(
                    "plan.a",
                    format!("not strictly decreasing at N = {}", k + 1),
                ));
            }
        }
        for (k, &v) in delta.iter().enumerate() {
            if !(v > 0.0 && v <= t_end) {
                return Err(Error::invalid(
                    "plan.delta",
                    format!("delta_{} = {v} not in (0, T]", k + 1),
                ));
            }
            if k > 0 && v > delta[k - 1] {
                return Err(Error::invalid("plan.delta", format!("increases at N = {}", k + 1)));
            }
        }
        Ok(RatePlan { a, delta })
    }

    /// Evaluates expression strings in `N` (and `T`, `tau1`, `tau2`) for
    /// `N = 1..=prefix_len`.
    pub fn from_expressions(a_expr: &str, delta_expr: &str, prefix_len: usize, vars: PlanVars) -> Result<Self> {
        let a = eval_sequence(a_expr, prefix_len, vars)?;
        let delta = eval_sequence(delta_expr, prefix_len, vars)?;
        RatePlan::new(a, delta, vars.t_end)
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn a(&self, n: usize) -> Result<f64> {
        self.get(&self.a, n)
    }

    pub fn delta(&self, n: usize) -> Result<f64> {
        self.get(&self.delta, n)
    }

    fn get(&self, seq: &[f64], n: usize) -> Result<f64> {
        if n == 0 || n > seq.len() {
            return Err(Error::PrefixExhausted { n, len: seq.len() });
        }
        Ok(seq[n - 1])
    }
}

fn eval_sequence(expr: &str, len: usize, vars: PlanVars) -> Result<Vec<f64>> {
    let err = |message: String| Error::Expression {
        expr: expr.to_string(),
        message,
    };
    let parsed: meval::Expr = expr.parse().map_err(|e: meval::Error| err(e.to_string()))?;
    (1..=len)
        .map(|n| {
            let mut ctx = meval::Context::new();
            ctx.var("N", n as f64)
                .var("T", vars.t_end)
                .var("tau1", vars.tau1)
                .var("tau2", vars.tau2);
            parsed.eval_with_context(ctx).map_err(|e| err(e.to_string()))
        })
        .collect()
}

/// Least stored `N` with `a_N + c2/N <= c1`.
pub fn compute_n0(plan: &RatePlan, c1: f64, c2: f64) -> Result<usize> {
    (1..=plan.len())
        .find(|&n| plan.a[n - 1] + c2 / n as f64 <= c1)
        .ok_or(Error::NoAdmissibleIndex {
            prefix_len: plan.len(),
            c1,
            c2,
        })
}

/// Knots `b_N`, plateaus `d_N` for every stored `N >= N0`.
pub fn compute_knots(plan: &RatePlan, consts: &DerivedConstants, tau1: f64) -> Result<PsiSpec> {
    let n0 = compute_n0(plan, consts.c1, consts.c2)?;
    let mut b = Vec::with_capacity(plan.len() + 1 - n0);
    let mut d = Vec::with_capacity(b.capacity());
    for n in n0..=plan.len() {
        let ratio = (plan.a[n - 1] + consts.c2 / n as f64) / consts.c1;
        b.push((-consts.beta * ratio.ln()).sqrt());
        d.push(consts.knot_level(tau1, plan.delta[n - 1], n));
    }
    PsiSpec::from_knots(n0, b, d, consts.alpha, consts.beta)
}

/// Result of `psi^{-1}`, flagged when the tail beyond the last knot was used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inverse {
    pub x: f64,
    pub extrapolated: bool,
}

/// The glued `psi` pinned by its knots.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiSpec {
    #[serde(rename = "N0")]
    n0: usize,
    b: Vec<f64>,
    d: Vec<f64>,
    alpha: f64,
    beta: f64,
    tail_slope: f64,
}

#[derive(Deserialize)]
struct PsiSpecRaw {
    #[serde(rename = "N0")]
    n0: usize,
    b: Vec<f64>,
    d: Vec<f64>,
    alpha: f64,
    beta: f64,
    tail_slope: f64,
}

impl<'de> Deserialize<'de> for PsiSpec {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = PsiSpecRaw::deserialize(de)?;
        let spec = PsiSpec::from_knots(raw.n0, raw.b, raw.d, raw.alpha, raw.beta).map_err(serde::de::Error::custom)?;
        if !(raw.tail_slope > 0.0 && raw.tail_slope.is_finite()) {
            return Err(serde::de::Error::custom("tail_slope must be positive"));
        }
        Ok(PsiSpec {
            tail_slope: raw.tail_slope,
            ..spec
        })
    }
}

impl PsiSpec {
    /// Checks the knot table (`b`, `d` strictly increasing, `d > 0`, at
    /// least two knots) and derives the tail slope.
    pub fn from_knots(n0: usize, b: Vec<f64>, d: Vec<f64>, alpha: f64, beta: f64) -> Result<Self> {
        if n0 == 0 || b.len() != d.len() || b.len() < 2 {
            return Err(Error::invalid("psi", "need N0 >= 1 and at least two knots"));
        }
        if !(d[0] > 0.0) || b.iter().chain(&d).any(|v| !v.is_finite()) {
            return Err(Error::invalid("psi", "knots must be finite with d_N0 > 0"));
        }
        for k in 1..b.len() {
            if !(b[k] > b[k - 1] && d[k] > d[k - 1]) {
                return Err(Error::NonMonotoneKnots { n: n0 + k });
            }
        }
        let last = b.len() - 1;
        let tail_slope = (d[last] - d[last - 1]) / (b[last] - b[last - 1]);
        Ok(PsiSpec {
            n0,
            b,
            d,
            alpha,
            beta,
            tail_slope,
        })
    }

    pub fn n0(&self) -> usize {
        self.n0
    }
    /// Index of the last stored knot.
    pub fn n_last(&self) -> usize {
        self.n0 + self.b.len() - 1
    }
    pub fn knots(&self) -> &[f64] {
        &self.b
    }
    pub fn plateaus(&self) -> &[f64] {
        &self.d
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn tail_slope(&self) -> f64 {
        self.tail_slope
    }

    /// `(b_N, d_N)` for a stored `N`.
    pub fn knot(&self, n: usize) -> Option<(f64, f64)> {
        let k = n.checked_sub(self.n0)?;
        Some((*self.b.get(k)?, self.d[k]))
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (b, d) = (&self.b, &self.d);
        let last = b.len() - 1;
        let idx = b.partition_point(|&bk| bk < x);
        if idx <= last && is_tie(x, b[idx]) {
            return d[idx];
        }
        if idx > 0 && is_tie(x, b[idx - 1]) {
            return d[idx - 1];
        }
        if idx == 0 {
            let e = (1.0 / (x - b[0])).max(-EXP_CLAMP);
            return d[0] * -e.exp_m1();
        }
        if idx > last {
            // flat to all orders at the last knot, slope tail_slope at infinity
            let u = x - b[last];
            return d[last] + self.tail_slope * u * (-1.0 / u).exp();
        }
        let (lo, hi) = (b[idx - 1], b[idx]);
        let (dlo, dhi) = (d[idx - 1], d[idx]);
        let z = (1.0 / (x - lo) - 1.0 / (hi - x)).clamp(-EXP_CLAMP, EXP_CLAMP);
        let step = dhi - dlo;
        // each half is anchored at its own plateau so both saturate exactly
        let mid = dlo + 0.5 * step;
        if z >= 0.0 {
            (dlo + step / (1.0 + z.exp())).clamp(dlo, mid)
        } else {
            (dhi - step / (1.0 + (-z).exp())).clamp(mid, dhi)
        }
    }

    pub fn inv(&self, y: f64) -> Result<f64> {
        self.inv_with_provenance(y).map(|i| i.x)
    }

    /// `psi^{-1}(y)` by monotone bisection; exact at knot values, closed
    /// bracket on the tail beyond the last knot.
    pub fn inv_with_provenance(&self, y: f64) -> Result<Inverse> {
        if !y.is_finite() {
            return Err(Error::PsiInverse {
                y,
                reason: "not finite",
            });
        }
        if !(y > 0.0) {
            return Err(Error::PsiInverse {
                y,
                reason: "psi is positive",
            });
        }
        let (b, d) = (&self.b, &self.d);
        let last = d.len() - 1;
        let idx = d.partition_point(|&dk| dk < y);
        if idx <= last && d[idx] == y {
            return Ok(Inverse {
                x: b[idx],
                extrapolated: false,
            });
        }
        if idx > last {
            // u exp(-1/u) lies in [u - 1, u]
            let r = (y - d[last]) / self.tail_slope;
            let x = bisect(|x| self.eval(x), y, b[last] + r, b[last] + r + 1.0);
            return Ok(Inverse { x, extrapolated: true });
        }
        let (lo, hi) = if idx == 0 {
            let mut span = 1.0;
            while self.eval(b[0] - span) >= y {
                span *= 2.0;
                if !(b[0] - span).is_finite() {
                    return Err(Error::PsiInverse {
                        y,
                        reason: "below representable range",
                    });
                }
            }
            (b[0] - span, b[0])
        } else {
            (b[idx - 1], b[idx])
        };
        Ok(Inverse {
            x: bisect(|x| self.eval(x), y, lo, hi),
            extrapolated: false,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[inline]
fn is_tie(x: f64, knot: f64) -> bool {
    (x - knot).abs() <= KNOT_TIE * (1.0 + knot.abs())
}

/// Bisection for a non-decreasing `f` with `f(lo) < y <= f(hi)`.
fn bisect<F: Fn(f64) -> f64>(f: F, y: f64, mut lo: f64, mut hi: f64) -> f64 {
    loop {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= INV_TOL * mid.abs().max(1.0) || mid <= lo || mid >= hi {
            return mid;
        }
        if f(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// `psi` as used by the SDE: the glued construction or a simple stub.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Psi {
    Glued(PsiSpec),
    /// `psi ≡ value`. Not invertible; used as a mild stub for solver checks.
    Constant {
        value: f64,
    },
    /// `psi(x) = slope * x + intercept`. Invertible but fails the growth
    /// condition; a diagnostic stub.
    Affine {
        slope: f64,
        intercept: f64,
    },
}

impl Psi {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Psi::Glued(spec) => spec.eval(x),
            Psi::Constant { value } => *value,
            Psi::Affine { slope, intercept } => slope * x + intercept,
        }
    }

    pub fn inv_with_provenance(&self, y: f64) -> Result<Inverse> {
        match self {
            Psi::Glued(spec) => spec.inv_with_provenance(y),
            Psi::Constant { .. } => Err(Error::PsiInverse {
                y,
                reason: "constant psi is not invertible",
            }),
            Psi::Affine { slope, intercept } => {
                if !(*slope > 0.0) || !y.is_finite() {
                    return Err(Error::PsiInverse {
                        y,
                        reason: "affine psi needs slope > 0",
                    });
                }
                Ok(Inverse {
                    x: (y - intercept) / slope,
                    extrapolated: false,
                })
            }
        }
    }

    pub fn inv(&self, y: f64) -> Result<f64> {
        self.inv_with_provenance(y).map(|i| i.x)
    }

    /// Numerical check that `1` lies in the range of `psi`.
    pub fn attains_one(&self) -> bool {
        match self.inv(1.0) {
            Ok(x) => (self.eval(x) - 1.0).abs() <= 1e-9,
            Err(_) => matches!(self, Psi::Constant { value } if *value == 1.0),
        }
    }
}

pub fn psi_eval(spec: &PsiSpec, x: f64) -> f64 {
    spec.eval(x)
}

pub fn psi_inv(spec: &PsiSpec, y: f64) -> Result<f64> {
    spec.inv(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> PsiSpec {
        PsiSpec::from_knots(3, vec![0.5, 1.0, 1.75, 2.0], vec![10.0, 30.0, 70.0, 200.0], 1.0, 1.0).unwrap()
    }

    #[test]
    fn knot_values_are_exact() {
        let s = toy();
        for (b, d) in s.knots().iter().zip(s.plateaus()) {
            assert_eq!(s.eval(*b), *d);
        }
        assert_eq!(s.knot(4), Some((1.0, 30.0)));
        assert_eq!(s.knot(2), None);
        assert_eq!(s.knot(7), None);
    }

    #[test]
    fn midpoint_gives_plateau_average() {
        let s = toy();
        assert_eq!(s.eval(0.75), 20.0);
        assert!((s.eval(1.375) - 50.0).abs() < 1e-12);
    }

    #[test]
    fn left_tail_is_positive_and_below_first_plateau() {
        let s = toy();
        let v = s.eval(0.5 - 1e3);
        let closed = -10.0 * (-1e-3f64).exp_m1();
        assert!(v > 0.0 && v < 10.0);
        assert!((v - closed).abs() <= 1e-15 * closed);
        assert!(s.eval(-1e300) > 0.0);
    }

    #[test]
    fn right_tail_approaches_last_secant() {
        let s = toy();
        assert_eq!(s.tail_slope(), 130.0 / 0.25);
        let y = 200.0 + 520.0 * (-1.0f64).exp();
        assert!((s.eval(3.0) - y).abs() < 1e-12);
        let i = s.inv_with_provenance(y).unwrap();
        assert!(i.extrapolated && (i.x - 3.0).abs() < 1e-11);
        let far = (s.eval(1e6 + 1.0) - s.eval(1e6)) / 520.0;
        assert!((far - 1.0).abs() < 1e-9);
    }

    #[test]
    fn inverse_hits_knots_and_midpoints() {
        let s = toy();
        assert_eq!(s.inv(30.0).unwrap(), 1.0);
        assert!((s.inv(20.0).unwrap() - 0.75).abs() < 1e-12);
        assert!(s.inv(0.0).is_err());
        assert!(s.inv(-1.0).is_err());
        assert!(s.inv(f64::INFINITY).is_err());
    }

    #[test]
    fn inverse_of_one_in_left_tail_matches_closed_form() {
        let s = toy();
        let x = s.inv(1.0).unwrap();
        // d0 (1 - e^{1/(x - b0)}) = 1  <=>  x = b0 + 1 / ln(1 - 1/d0)
        let exact = 0.5 + 1.0 / (-0.1f64).ln_1p();
        assert!((x - exact).abs() < 1e-11 * exact.abs().max(1.0));
        assert!(Psi::Glued(s).attains_one());
    }

    #[test]
    fn rejects_non_monotone_knots() {
        let e = PsiSpec::from_knots(1, vec![0.0, 1.0, 0.5], vec![1.0, 2.0, 3.0], 1.0, 1.0);
        assert!(matches!(e, Err(Error::NonMonotoneKnots { n: 3 })));
        let e = PsiSpec::from_knots(1, vec![0.0, 1.0], vec![1.0, 1.0], 1.0, 1.0);
        assert!(matches!(e, Err(Error::NonMonotoneKnots { n: 2 })));
    }

    #[test]
    fn json_round_trip_and_validation() {
        let s = toy();
        let back = PsiSpec::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(back, s);
        let bad = s.to_json().unwrap().replace("\"N0\": 3", "\"N0\": 0");
        assert!(PsiSpec::from_json(&bad).is_err());
    }

    #[test]
    fn n0_scan_and_failure() {
        let (c1, c2) = (1.0, 2.0);
        // a_N = c1/2 - c2/N is not positive for small N, so use a valid shape
        let a: Vec<f64> = (1..=10).map(|n| 5.0 / n as f64).collect();
        let plan = RatePlan::new(a, vec![0.1; 10], 1.0).unwrap();
        // 5/N + 2/N <= 1  <=>  N >= 7
        assert_eq!(compute_n0(&plan, c1, c2).unwrap(), 7);
        let hopeless = RatePlan::new((1..=10).map(|n| 3.0 - 0.1 * n as f64).collect(), vec![0.1; 10], 1.0).unwrap();
        assert!(matches!(
            compute_n0(&hopeless, c1, c2),
            Err(Error::NoAdmissibleIndex { .. })
        ));
    }

    #[test]
    fn stub_knot_equals_beta() {
        let consts = DerivedConstants::from_parts(1.0, 0.7, 1.0);
        // choose a_1 so that (a_1 + c2)/c1 = exp(-beta): then b_1 = beta
        let a1 = consts.c1 * (-consts.beta).exp() - consts.c2;
        let a1 = if a1 > 0.0 { a1 } else { return };
        let plan = RatePlan::new(vec![a1, a1 / 2.0], vec![0.1, 0.1], 1.0).unwrap();
        let spec = compute_knots(&plan, &consts, 0.25).unwrap();
        assert!((spec.knots()[0] - consts.beta).abs() < 1e-12);
    }

    #[test]
    fn plan_expressions_and_validation() {
        let vars = PlanVars {
            t_end: 1.0,
            tau1: 0.25,
            tau2: 0.5,
        };
        let plan = RatePlan::from_expressions("1/ln(N+1)", "min(1, 2/N)*tau1/2", 5, vars).unwrap();
        assert_eq!(plan.a(1).unwrap(), 1.0 / 2f64.ln());
        assert_eq!(plan.delta(1).unwrap(), 0.125);
        assert_eq!(plan.delta(4).unwrap(), 0.0625);
        assert!(matches!(plan.a(6), Err(Error::PrefixExhausted { n: 6, len: 5 })));
        assert!(RatePlan::from_expressions("1/ln(N+1", "1", 3, vars).is_err());
        assert!(RatePlan::from_expressions("N", "0.1", 3, vars).is_err());
        assert!(RatePlan::from_expressions("1/N", "N/10", 3, vars).is_err());
        assert!(RatePlan::from_expressions("1/N", "2", 3, vars).is_err());
    }
}
