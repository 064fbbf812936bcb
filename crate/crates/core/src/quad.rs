//! One-dimensional quadrature used throughout the crate.
//!
//! The coefficient functions are built from `exp(1/(x - tau))` factors that
//! vanish with every derivative at the support edges, so a composite adaptive
//! Simpson rule converges quickly on them without special endpoint handling.

use crate::error::{Error, Result};

/// Default absolute tolerance for coefficient integrals.
pub const DEFAULT_TOL: f64 = 1e-10;

const MAX_DEPTH: u32 = 50;
const INITIAL_PANELS: usize = 16;

/// Composite adaptive Simpson quadrature of `f` on `[a, b]` to absolute
/// tolerance `tol`.
///
/// The interval is split into a fixed number of panels first so that narrow
/// peaks cannot hide between the five initial sample points.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    adaptive_simpson_panels(f, a, b, tol, INITIAL_PANELS)
}

/// Same as [`adaptive_simpson`] with an explicit number of initial panels.
pub fn adaptive_simpson_panels<F>(f: F, a: f64, b: f64, tol: f64, panels: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::invalid("bounds", "must be finite"));
    }
    if a == b {
        return Ok(0.0);
    }
    if a > b {
        return adaptive_simpson_panels(f, b, a, tol, panels).map(|v| -v);
    }
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let panel_tol = tol / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let lo = a + width * k as f64;
        let hi = if k + 1 == panels { b } else { lo + width };
        let mid = 0.5 * (lo + hi);
        let (flo, fmid, fhi) = (f(lo), f(mid), f(hi));
        let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
        total +=
            refine(&f, lo, hi, flo, fmid, fhi, whole, panel_tol, MAX_DEPTH).ok_or(Error::Quadrature { a, b, tol })?;
    }
    if !total.is_finite() {
        return Err(Error::NonFinite("quadrature result".into()));
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Option<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Some(left + right + delta / 15.0);
    }
    if depth == 0 || m <= a || m >= b {
        return None;
    }
    let l = refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Some(l + r)
}

/// Golden-section search for a minimum of a unimodal `f` on `[a, b]`.
/// Returns the abscissa and value of the best point seen.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let (fa, fb) = (f(a), f(b));
    let mut best = if fa <= fb { (a, fa) } else { (b, fb) };
    while (b - a) > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    for cand in [(c, fc), (d, fd)] {
        if cand.1 < best.1 {
            best = cand;
        }
    }
    best
}

/// Composite trapezoidal rule over tabulated samples.
pub fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_on_cubics() {
        let v = adaptive_simpson(|x| 3.0 * x * x * x - x + 2.0, -1.0, 2.0, 1e-12).unwrap();
        // 3/4 (16 - 1) - (4 - 1)/2 + 2*3
        assert!((v - (11.25 - 1.5 + 6.0)).abs() < 1e-12);
    }

    #[test]
    fn simpson_handles_reversed_and_empty_intervals() {
        assert_eq!(adaptive_simpson(|x| x, 1.0, 1.0, 1e-9).unwrap(), 0.0);
        let v = adaptive_simpson(|x| x.cos(), 1.0, 0.0, 1e-12).unwrap();
        assert!((v + 1f64.sin()).abs() < 1e-11);
    }

    #[test]
    fn simpson_converges_on_peaked_bump() {
        // exp(-2048 u^2) on [-1/8, 1/8]; the tails beyond are ~e^-32
        let v = adaptive_simpson(|u| (-2048.0 * u * u).exp(), -0.125, 0.125, 1e-13).unwrap();
        let exact = (std::f64::consts::PI / 2048.0).sqrt();
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn simpson_rejects_bad_tolerance() {
        assert!(adaptive_simpson(|x| x, 0.0, 1.0, 0.0).is_err());
        assert!(adaptive_simpson(|x| x, 0.0, f64::INFINITY, 1e-3).is_err());
    }

    #[test]
    fn golden_section_finds_parabola_vertex() {
        let (x, fx) = golden_section_min(|x| (x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-9);
        assert!(fx < 1e-18);
    }

    #[test]
    fn trapezoid_integrates_lines_exactly() {
        let t = [0.0, 0.1, 0.5, 1.0];
        let v: Vec<f64> = t.iter().map(|x| 2.0 * x + 1.0).collect();
        assert!((trapezoid(&t, &v) - 2.0).abs() < 1e-15);
    }
}
