//! Closed-form lower bounds and their diagnostics.
//!
//! For `N` evaluations in `(0, delta)`, every scheme has mean error at least
//!
//! ```text
//! c1 exp(-psi^{-1}(D_N)^2 / beta) - c2 / N,
//! D_N = (1 + sqrt(96 / (alpha min(delta, tau1/2)^3))) N^3.
//! ```

use std::f64::consts::PI;

use serde::Serialize;

use crate::coeffs::DerivedConstants;
use crate::error::{Error, Result};
use crate::psi::{compute_n0, Psi, RatePlan};
use crate::quad::adaptive_simpson;

/// One evaluation of the lower bound with the quantities behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundPoint {
    pub n: usize,
    /// May be negative, in which case the bound is vacuous.
    pub raw: f64,
    pub clamped: f64,
    pub d_n: f64,
    pub psi_inv_dn: f64,
    /// `psi^{-1}(D_N)` came from the extension beyond the stored knots.
    pub extrapolated: bool,
}

pub fn thm1_bound_detail(consts: &DerivedConstants, psi: &Psi, tau1: f64, delta: f64, n: usize) -> Result<BoundPoint> {
    if n == 0 {
        return Err(Error::invalid("N", "must be at least 1"));
    }
    if !(delta > 0.0) {
        return Err(Error::invalid("delta", "must be positive"));
    }
    let d_n = consts.knot_level(tau1, delta, n);
    let inv = psi.inv_with_provenance(d_n)?;
    let raw = consts.c1 * (-inv.x * inv.x / consts.beta).exp() - consts.c2 / n as f64;
    Ok(BoundPoint {
        n,
        raw,
        clamped: raw.max(0.0),
        d_n,
        psi_inv_dn: inv.x,
        extrapolated: inv.extrapolated,
    })
}

/// The raw lower bound; callers clamp for display.
pub fn thm1_bound(consts: &DerivedConstants, psi: &Psi, tau1: f64, delta: f64, n: usize) -> Result<f64> {
    thm1_bound_detail(consts, psi, tau1, delta, n).map(|p| p.raw)
}

/// `kappa = a_{N0} / a_1`.
pub fn cor3_kappa(plan: &RatePlan, consts: &DerivedConstants) -> Result<f64> {
    let n0 = compute_n0(plan, consts.c1, consts.c2)?;
    Ok(plan.a(n0)? / plan.a(1)?)
}

/// `kappa a_N`.
pub fn cor3_bound(plan: &RatePlan, consts: &DerivedConstants, n: usize) -> Result<f64> {
    Ok(cor3_kappa(plan, consts)? * plan.a(n)?)
}

/// `exp(-pi^2/8) / sqrt(8 pi)`, a lower bound on `E|sin Y|` for Gaussian `Y`
/// with standard deviation at least 1.
pub fn sine_moment_bound() -> f64 {
    (-PI * PI / 8.0).exp() / (8.0 * PI).sqrt()
}

/// Half-width in standard deviations of the integration window.
const SINE_WINDOW: f64 = 9.0;

/// `E|sin Y|` for `Y ~ N(a, tau^2)`, integrating piecewise between the
/// zeros of `sin`.
pub fn sine_moment(a: f64, tau: f64, quad_tol: f64) -> Result<f64> {
    if !(tau > 0.0) || !a.is_finite() || !tau.is_finite() {
        return Err(Error::invalid("tau", "need finite a and tau > 0"));
    }
    let (lo, hi) = (-SINE_WINDOW, SINE_WINDOW);
    // zeros of sin(a + tau z) at z = (k pi - a) / tau
    let k_lo = ((a + tau * lo) / PI).ceil() as i64;
    let k_hi = ((a + tau * hi) / PI).floor() as i64;
    let mut cuts = vec![lo];
    cuts.extend(
        (k_lo..=k_hi)
            .map(|k| (k as f64 * PI - a) / tau)
            .filter(|&z| lo < z && z < hi),
    );
    cuts.push(hi);
    let piece_tol = quad_tol / cuts.len() as f64;
    let density = |z: f64| (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += adaptive_simpson(|z| (a + tau * z).sin().abs() * density(z), w[0], w[1], piece_tol)?;
    }
    Ok(total)
}

/// `N` against a bound or diagnostic value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCurve {
    pub n_values: Vec<usize>,
    pub bound_values: Vec<f64>,
}

impl BoundCurve {
    pub fn new(n_values: Vec<usize>, bound_values: Vec<f64>) -> Result<Self> {
        if n_values.len() != bound_values.len() {
            return Err(Error::invalid("curve", "lengths differ"));
        }
        if n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("curve", "N values must be strictly increasing"));
        }
        Ok(BoundCurve { n_values, bound_values })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuperpolyDiagnostic {
    pub curve: BoundCurve,
    /// Strictly increasing over the second half of the range.
    pub tail_increasing: bool,
}

/// `N^q exp(-psi^{-1}(D_N)^2 / beta)` over `n_range`, where `delta_of(N)`
/// supplies the interval length used in `D_N`.
pub fn superpoly_diagnostic(
    psi: &Psi,
    consts: &DerivedConstants,
    tau1: f64,
    delta_of: impl Fn(usize) -> Result<f64>,
    q: f64,
    n_range: std::ops::RangeInclusive<usize>,
) -> Result<SuperpolyDiagnostic> {
    if !(q >= 0.0) {
        return Err(Error::invalid("q", "must be non-negative"));
    }
    let mut ns = Vec::new();
    let mut vals = Vec::new();
    for n in n_range {
        let d_n = consts.knot_level(tau1, delta_of(n)?, n);
        let x = psi.inv(d_n)?;
        ns.push(n);
        vals.push((n as f64).powf(q) * (-x * x / consts.beta).exp());
    }
    let half = vals.len() / 2;
    let tail_increasing = vals.len() >= 2 && vals[half..].windows(2).all(|w| w[1] > w[0]);
    Ok(SuperpolyDiagnostic {
        curve: BoundCurve::new(ns, vals)?,
        tail_increasing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_preimage_gives_c1_minus_c2_over_n() {
        let c = DerivedConstants::from_parts(4.0, 2.0, 1000.0);
        for n in [1usize, 5, 40] {
            let d = c.knot_level(0.25, 0.1, n);
            let psi = Psi::Affine {
                slope: 1.0,
                intercept: d,
            };
            let b = thm1_bound(&c, &psi, 0.25, 0.1, n).unwrap();
            assert!((b - (c.c1 - c.c2 / n as f64)).abs() < 1e-12 * c.c2);
        }
    }

    #[test]
    fn sine_bound_value() {
        let b = sine_moment_bound();
        assert!((b - 0.05809).abs() < 5e-5);
        assert!(b < 1.0);
    }

    #[test]
    fn sine_moment_limits() {
        assert!(sine_moment(0.0, 1e-3, 1e-10).unwrap() < 1e-2);
        assert!((sine_moment(0.3, 1e3, 1e-9).unwrap() - 2.0 / PI).abs() < 1e-3);
        // a = pi/2, tau small: |sin| close to 1
        assert!((sine_moment(PI / 2.0, 1e-3, 1e-12).unwrap() - 1.0).abs() < 1e-5);
        assert!(sine_moment(0.0, 0.0, 1e-9).is_err());
    }

    #[test]
    fn curve_validation() {
        assert!(BoundCurve::new(vec![1, 1], vec![0.0, 0.0]).is_err());
        assert!(BoundCurve::new(vec![1], vec![]).is_err());
        assert!(BoundCurve::new(vec![], vec![]).is_ok());
    }

    #[test]
    fn linear_psi_fails_growth_diagnostic() {
        let c = DerivedConstants::from_parts(4.0, 2.0, 1000.0);
        let psi = Psi::Affine {
            slope: 1.0,
            intercept: 0.0,
        };
        let d = superpoly_diagnostic(&psi, &c, 0.25, |_| Ok(0.1), 8.0, 1..=10).unwrap();
        assert!(!d.tail_increasing);
    }
}
