//! Coefficient functions `f`, `g`, `h` of the four-dimensional test SDE and
//! the constants derived from them.
//!
//! The SDE is
//!
//! ```text
//! dX1 = dt
//! dX2 = f(X1) dW
//! dX3 = g(X1) dW
//! dX4 = h(X1) cos(X2 psi(X3)) dt,        X(0) = 0
//! ```
//!
//! with `supp f ⊆ (-inf, tau1]`, `supp g ⊆ [tau1, tau2]`, `supp h ⊆ [tau2, inf)`.
//! The concrete functions here are the classical `exp(1/(x - tau))` bump
//! factors; their log-amplitudes are chosen either for unit sup-norm or so
//! that `beta = ∫ g²` and `gamma = ∫ h` hit prescribed targets.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quad::{adaptive_simpson, golden_section_min};

/// Exponent arguments below this are treated as `exp(-inf) = 0`.
pub const EXP_FLOOR: f64 = -700.0;

/// Grid size used to locate the infimum of `|f'|` on `[0, tau1/2]`.
pub const ALPHA_GRID: usize = 100_000;

/// `|f'|` minima below this are reported as a degenerate `f`.
pub const ALPHA_FLOOR: f64 = 1e-10;

/// Closed support of a coefficient function. Either bound may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub lo: f64,
    pub hi: f64,
}

impl Support {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Support { lo, hi }
    }

    pub const fn everywhere() -> Self {
        Support::new(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn contains(&self, t: f64) -> bool {
        self.lo <= t && t <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    /// `exp(c + 1/(x - edge))` for `x < edge`.
    LeftBump { edge: f64 },
    /// `exp(c + 1/(lo - x) + 1/(x - hi))` for `lo < x < hi`.
    Bump { lo: f64, hi: f64 },
    /// `exp(c + 1/(edge - x))` for `x > edge`.
    RightBump { edge: f64 },
    /// `intercept + slope * x` on the support. Only smooth in the interior;
    /// meant for stubs in tests and diagnostics.
    Affine { intercept: f64, slope: f64 },
}

/// A bounded function with analytic derivative and known support.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothFn {
    shape: Shape,
    log_amp: f64,
    support: Support,
    sup_bound: f64,
}

impl SmoothFn {
    pub fn left_bump(edge: f64, log_amp: f64) -> Self {
        SmoothFn {
            shape: Shape::LeftBump { edge },
            log_amp,
            support: Support::new(f64::NEG_INFINITY, edge),
            sup_bound: log_amp.exp(),
        }
    }

    pub fn bump(lo: f64, hi: f64, log_amp: f64) -> Self {
        // the exponent peaks at the midpoint with value -4/(hi - lo)
        SmoothFn {
            shape: Shape::Bump { lo, hi },
            log_amp,
            support: Support::new(lo, hi),
            sup_bound: (log_amp - 4.0 / (hi - lo)).exp(),
        }
    }

    pub fn right_bump(edge: f64, log_amp: f64) -> Self {
        SmoothFn {
            shape: Shape::RightBump { edge },
            log_amp,
            support: Support::new(edge, f64::INFINITY),
            sup_bound: log_amp.exp(),
        }
    }

    /// `intercept + slope * x` on `support`, zero elsewhere.
    pub fn affine(intercept: f64, slope: f64, support: Support) -> Self {
        let at = |x: f64| {
            if x.is_infinite() {
                if slope == 0.0 {
                    intercept.abs()
                } else {
                    f64::INFINITY
                }
            } else {
                (intercept + slope * x).abs()
            }
        };
        SmoothFn {
            shape: Shape::Affine { intercept, slope },
            log_amp: 0.0,
            support,
            sup_bound: at(support.lo).max(at(support.hi)),
        }
    }

    pub fn constant(value: f64, support: Support) -> Self {
        SmoothFn::affine(value, 0.0, support)
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    /// Exponent of the bump factor at `x`, `None` outside the open support.
    #[inline]
    fn exponent(&self, x: f64) -> Option<f64> {
        let e = match self.shape {
            Shape::LeftBump { edge } if x < edge => 1.0 / (x - edge),
            Shape::Bump { lo, hi } if lo < x && x < hi => 1.0 / (lo - x) + 1.0 / (x - hi),
            Shape::RightBump { edge } if x > edge => 1.0 / (edge - x),
            _ => return None,
        };
        let e = self.log_amp + e;
        (e >= EXP_FLOOR).then_some(e)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self.shape {
            Shape::Affine { intercept, slope } => {
                if self.support.contains(x) {
                    intercept + slope * x
                } else {
                    0.0
                }
            }
            _ => self.exponent(x).map_or(0.0, f64::exp),
        }
    }

    #[inline]
    pub fn deriv(&self, x: f64) -> f64 {
        match self.shape {
            Shape::Affine { slope, .. } => {
                if self.support.contains(x) {
                    slope
                } else {
                    0.0
                }
            }
            Shape::LeftBump { edge } => self.exponent(x).map_or(0.0, |e| {
                let u = x - edge;
                -e.exp() / (u * u)
            }),
            Shape::Bump { lo, hi } => self.exponent(x).map_or(0.0, |e| {
                let (l, r) = (lo - x, x - hi);
                e.exp() * (1.0 / (l * l) - 1.0 / (r * r))
            }),
            Shape::RightBump { edge } => self.exponent(x).map_or(0.0, |e| {
                let u = edge - x;
                e.exp() / (u * u)
            }),
        }
    }
}

/// Parameters of the default coefficient construction.
///
/// `None` targets mean unit sup-norm for that function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoefficientParams {
    pub t_end: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub beta_target: Option<f64>,
    pub gamma_target: Option<f64>,
}

impl Default for CoefficientParams {
    fn default() -> Self {
        CoefficientParams {
            t_end: 1.0,
            tau1: 0.25,
            tau2: 0.5,
            beta_target: Some(DEFAULT_BETA),
            gamma_target: Some(DEFAULT_GAMMA),
        }
    }
}

/// Default value of `∫ g²`. It minimises `c2/c1 = 2 sqrt(2 pi beta) exp(1/beta)`.
pub const DEFAULT_BETA: f64 = 2.0;
/// Default value of `∫ h`.
pub const DEFAULT_GAMMA: f64 = 1000.0;

impl CoefficientParams {
    pub fn unit_sup(t_end: f64, tau1: f64, tau2: f64) -> Self {
        CoefficientParams {
            t_end,
            tau1,
            tau2,
            beta_target: None,
            gamma_target: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.t_end, self.tau1, self.tau2].iter().all(|v| v.is_finite());
        if !ok || !(0.0 < self.tau1 && self.tau1 < self.tau2 && self.tau2 < self.t_end) {
            return Err(Error::invalid(
                "coefficients",
                format!(
                    "need 0 < tau1 < tau2 < T, got T = {}, tau1 = {}, tau2 = {}",
                    self.t_end, self.tau1, self.tau2
                ),
            ));
        }
        for (name, v) in [("beta_target", self.beta_target), ("gamma_target", self.gamma_target)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::invalid(name, "must be positive and finite"));
                }
            }
        }
        Ok(())
    }
}

/// Structural data `(T, tau1, tau2, f, g, h)` of the SDE.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    t_end: f64,
    tau1: f64,
    tau2: f64,
    f: SmoothFn,
    g: SmoothFn,
    h: SmoothFn,
}

const VALIDATION_GRID: usize = 10_000;

impl CoefficientSet {
    /// Checks every structural condition and assembles the set.
    pub fn new(t_end: f64, tau1: f64, tau2: f64, f: SmoothFn, g: SmoothFn, h: SmoothFn) -> Result<Self> {
        CoefficientParams::unit_sup(t_end, tau1, tau2).validate()?;
        if f.support().hi > tau1 {
            return Err(Error::DegenerateCoefficient(format!(
                "supp f reaches past tau1 = {tau1}"
            )));
        }
        if g.support().lo < tau1 || g.support().hi > tau2 {
            return Err(Error::DegenerateCoefficient(format!(
                "supp g not inside [{tau1}, {tau2}]"
            )));
        }
        if h.support().lo < tau2 {
            return Err(Error::DegenerateCoefficient(format!(
                "supp h starts before tau2 = {tau2}"
            )));
        }
        for (name, c) in [("f", &f), ("g", &g), ("h", &h)] {
            if !c.sup_bound().is_finite() {
                return Err(Error::DegenerateCoefficient(format!("{name} is unbounded")));
            }
        }
        let grid =
            |lo: f64, hi: f64| (0..=VALIDATION_GRID).map(move |k| lo + (hi - lo) * k as f64 / VALIDATION_GRID as f64);
        if grid(0.0, 0.5 * tau1).any(|t| f.deriv(t) == 0.0) {
            return Err(Error::DegenerateCoefficient("f' vanishes on [0, tau1/2]".into()));
        }
        if grid(tau1, tau2).all(|t| g.eval(t) == 0.0) {
            return Err(Error::DegenerateCoefficient("g vanishes on [tau1, tau2]".into()));
        }
        let gamma = adaptive_simpson(|t| h.eval(t), tau2, t_end, 1e-12)?;
        if gamma == 0.0 {
            return Err(Error::DegenerateCoefficient("∫ h over [tau2, T] is zero".into()));
        }
        Ok(CoefficientSet {
            t_end,
            tau1,
            tau2,
            f,
            g,
            h,
        })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }
    pub fn tau1(&self) -> f64 {
        self.tau1
    }
    pub fn tau2(&self) -> f64 {
        self.tau2
    }
    pub fn f(&self) -> &SmoothFn {
        &self.f
    }
    pub fn g(&self) -> &SmoothFn {
        &self.g
    }
    pub fn h(&self) -> &SmoothFn {
        &self.h
    }
}

/// Mollifier coefficients with the default amplitude targets.
pub fn make_default_coeffs(t_end: f64, tau1: f64, tau2: f64) -> Result<CoefficientSet> {
    make_coeffs(&CoefficientParams {
        t_end,
        tau1,
        tau2,
        ..CoefficientParams::default()
    })
}

/// Mollifier coefficients for `params`.
pub fn make_coeffs(params: &CoefficientParams) -> Result<CoefficientSet> {
    params.validate()?;
    let CoefficientParams { t_end, tau1, tau2, .. } = *params;

    let f = SmoothFn::left_bump(tau1, 0.0);

    let unit_g = SmoothFn::bump(tau1, tau2, 4.0 / (tau2 - tau1));
    let g = match params.beta_target {
        None => unit_g,
        Some(beta) => {
            let beta_unit = adaptive_simpson(|t| unit_g.eval(t).powi(2), tau1, tau2, 1e-14)?;
            SmoothFn::bump(tau1, tau2, 4.0 / (tau2 - tau1) + 0.5 * (beta / beta_unit).ln())
        }
    };

    let unit_h = SmoothFn::right_bump(tau2, 0.0);
    let h = match params.gamma_target {
        None => unit_h,
        Some(gamma) => {
            let gamma_unit = adaptive_simpson(|t| unit_h.eval(t), tau2, t_end, 1e-14)?;
            SmoothFn::right_bump(tau2, (gamma / gamma_unit).ln())
        }
    };

    CoefficientSet::new(t_end, tau1, tau2, f, g, h)
}

/// The constants `alpha`, `beta`, `gamma`, `c1`, `c2` entering the lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub c1: f64,
    pub c2: f64,
}

impl DerivedConstants {
    /// Fills in `c1`, `c2` from `alpha`, `beta`, `gamma`.
    ///
    /// `gamma` enters through its magnitude; the bound concerns `|X4 - X̂4|`
    /// and flipping the sign of `h` leaves it unchanged.
    pub fn from_parts(alpha: f64, beta: f64, gamma: f64) -> Self {
        let g = gamma.abs();
        let damp = (-PI * PI / 4.0).exp();
        let c2 = g * damp / (4.0 * PI);
        let c1 = g * damp * (-1.0 / beta).exp() / (8.0 * PI * (2.0 * PI * beta).sqrt());
        DerivedConstants {
            alpha,
            beta,
            gamma,
            c1,
            c2,
        }
    }

    /// `(1 + sqrt(96 / (alpha * min(delta, tau1/2)^3))) * n^3`, the argument
    /// handed to `psi^{-1}` by the lower bound and the knot values of the
    /// glued `psi`.
    pub fn knot_level(&self, tau1: f64, delta: f64, n: usize) -> f64 {
        let d = delta.min(0.5 * tau1);
        let n = n as f64;
        (1.0 + (96.0 / (self.alpha * d * d * d)).sqrt()) * n * n * n
    }

    pub fn check(&self) -> Result<()> {
        let DerivedConstants {
            alpha,
            beta,
            gamma,
            c1,
            c2,
        } = *self;
        if !(alpha > 0.0 && beta > 0.0 && gamma != 0.0 && c1 > 0.0 && c2 > 0.0 && c1 < c2) {
            return Err(Error::DegenerateCoefficient(format!("inadmissible constants {self:?}")));
        }
        Ok(())
    }
}

/// Computes the derived constants of `cs`, integrating to `quad_tol`.
pub fn derived_constants(cs: &CoefficientSet, quad_tol: f64) -> Result<DerivedConstants> {
    if !(quad_tol > 0.0) {
        return Err(Error::invalid("quad_tol", "must be positive"));
    }
    let alpha = alpha_of(cs.f(), cs.tau1())?;
    let beta = adaptive_simpson(|t| cs.g().eval(t).powi(2), cs.tau1(), cs.tau2(), quad_tol)?;
    let gamma = adaptive_simpson(|t| cs.h().eval(t), cs.tau2(), cs.t_end(), quad_tol)?;
    let consts = DerivedConstants::from_parts(alpha, beta, gamma);
    consts.check()?;
    Ok(consts)
}

/// `inf |f'|²` over `[0, tau1/2]`: grid minimum, then golden-section polish
/// in the bracketing cells.
fn alpha_of(f: &SmoothFn, tau1: f64) -> Result<f64> {
    let hi = 0.5 * tau1;
    let step = hi / ALPHA_GRID as f64;
    let abs_d = |t: f64| f.deriv(t).abs();
    let (mut k_best, mut v_best) = (0usize, f64::INFINITY);
    for k in 0..=ALPHA_GRID {
        let v = abs_d(step * k as f64);
        if v < v_best {
            (k_best, v_best) = (k, v);
        }
    }
    let lo_k = k_best.saturating_sub(1);
    let hi_k = (k_best + 1).min(ALPHA_GRID);
    let (_, polished) = golden_section_min(abs_d, step * lo_k as f64, step * hi_k as f64, step * 1e-6);
    let m = v_best.min(polished);
    if !(m >= ALPHA_FLOOR) {
        return Err(Error::DegenerateCoefficient(format!(
            "min |f'| on [0, tau1/2] is {m:e}, below the floor {ALPHA_FLOOR:e}"
        )));
    }
    Ok(m * m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_set() -> CoefficientSet {
        make_default_coeffs(1.0, 0.25, 0.5).unwrap()
    }

    #[test]
    fn supports_hold_exactly_on_fine_grid() {
        for cs in [
            default_set(),
            make_coeffs(&CoefficientParams::unit_sup(1.0, 0.25, 0.5)).unwrap(),
        ] {
            for k in 0..=10_000 {
                let t = -0.5 + 2.0 * k as f64 / 10_000.0;
                if t >= cs.tau1() {
                    assert_eq!(cs.f().eval(t), 0.0, "f({t})");
                }
                if t <= cs.tau1() || t >= cs.tau2() {
                    assert_eq!(cs.g().eval(t), 0.0, "g({t})");
                }
                if t <= cs.tau2() {
                    assert_eq!(cs.h().eval(t), 0.0, "h({t})");
                }
                for c in [cs.f(), cs.g(), cs.h()] {
                    assert!(c.eval(t).abs() <= c.sup_bound() * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn g_vanishes_at_half_tau1() {
        let cs = default_set();
        assert_eq!(cs.g().eval(cs.tau1() / 2.0), 0.0);
        assert_eq!(cs.f().eval(cs.tau1()), 0.0);
        assert_eq!(cs.f().eval(0.9), 0.0);
    }

    #[test]
    fn analytic_derivatives_match_central_differences() {
        let cs = default_set();
        let h = 1e-6;
        for c in [cs.f(), cs.g(), cs.h()] {
            for k in 1..200 {
                let t = -0.2 + 1.4 * k as f64 / 200.0;
                let fd = (c.eval(t + h) - c.eval(t - h)) / (2.0 * h);
                let scale = 1.0 + c.deriv(t).abs();
                assert!(
                    (fd - c.deriv(t)).abs() < 1e-5 * scale,
                    "t = {t}: {fd} vs {}",
                    c.deriv(t)
                );
            }
        }
    }

    #[test]
    fn rejects_unordered_times() {
        assert!(make_default_coeffs(1.0, 0.5, 0.25).is_err());
        assert!(make_default_coeffs(0.4, 0.25, 0.5).is_err());
        assert!(make_default_coeffs(1.0, 0.0, 0.5).is_err());
        assert!(make_default_coeffs(1.0, 0.25, f64::NAN).is_err());
    }

    #[test]
    fn rejects_misplaced_supports() {
        let f = SmoothFn::left_bump(0.3, 0.0);
        let g = SmoothFn::bump(0.25, 0.5, 16.0);
        let h = SmoothFn::right_bump(0.5, 0.0);
        assert!(CoefficientSet::new(1.0, 0.25, 0.5, f, g.clone(), h.clone()).is_err());
        let flat_f = SmoothFn::constant(1.0, Support::new(-1.0, 0.25));
        assert!(CoefficientSet::new(1.0, 0.25, 0.5, flat_f, g, h).is_err());
    }

    #[test]
    fn stub_constant_derivative_gives_alpha_four() {
        // f(t) = 2t - 1/2 on [-1, 1/4]: f' = 2 on [0, tau1/2]
        let f = SmoothFn::affine(-0.5, 2.0, Support::new(-1.0, 0.25));
        let g = SmoothFn::constant(1.0, Support::new(0.25, 0.5));
        let h = SmoothFn::right_bump(0.5, 0.0);
        let cs = CoefficientSet::new(1.0, 0.25, 0.5, f, g, h).unwrap();
        let c = derived_constants(&cs, 1e-10).unwrap();
        assert_eq!(c.alpha, 4.0);
        assert!((c.beta - 0.25).abs() < 1e-12);
    }

    #[test]
    fn degenerate_f_is_rejected_by_alpha_floor() {
        let f = SmoothFn::affine(-0.25, 1e-12, Support::new(-1.0, 0.25));
        let g = SmoothFn::constant(1.0, Support::new(0.25, 0.5));
        let h = SmoothFn::right_bump(0.5, 0.0);
        let cs = CoefficientSet::new(1.0, 0.25, 0.5, f, g, h).unwrap();
        assert!(matches!(
            derived_constants(&cs, 1e-10),
            Err(Error::DegenerateCoefficient(_))
        ));
    }

    #[test]
    fn constants_ratio_identity() {
        let c = derived_constants(&default_set(), 1e-10).unwrap();
        let ratio = c.c2 / c.c1;
        let expect = 2.0 * (2.0 * PI * c.beta).sqrt() * (1.0 / c.beta).exp();
        assert!((ratio / expect - 1.0).abs() < 1e-12);
        assert!(c.c1 < c.c2);
    }

    #[test]
    fn constants_are_bit_deterministic() {
        let cs = default_set();
        let a = derived_constants(&cs, 1e-10).unwrap();
        let b = derived_constants(&cs, 1e-10).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn knot_level_uses_min_of_delta_and_half_tau1() {
        let c = DerivedConstants::from_parts(4.0, 1.0, 1.0);
        let at = c.knot_level(0.25, 0.9, 3);
        let expect = (1.0 + (96.0f64 / (4.0 * 0.125f64.powi(3))).sqrt()) * 3.0 * 3.0 * 3.0;
        assert_eq!(at, expect);
        assert_eq!(c.knot_level(0.25, 0.125, 3), expect);
    }
}
