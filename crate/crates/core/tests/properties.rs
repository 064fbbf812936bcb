use proptest::prelude::*;
use sdebound_core::bounds::thm1_bound_detail;
use sdebound_core::bridge::{conditional_cov, conditional_mean, ObservationSet};
use sdebound_core::brownian::uniform_span;
use sdebound_core::harness::{ExperimentConfig, Setup};
use sdebound_core::{PathSegment, Psi};
use std::sync::OnceLock;

fn setup() -> &'static Setup {
    static S: OnceLock<Setup> = OnceLock::new();
    S.get_or_init(|| Setup::new(&ExperimentConfig::default()).unwrap())
}

fn observations(sites: &[f64], values: &[f64], delta: f64, tail_value: f64) -> ObservationSet {
    let t = uniform_span(delta, 1.0, 8);
    let w = t.iter().map(|&s| tail_value + (s - delta)).collect();
    ObservationSet::new(delta, sites, values, PathSegment::new(t, w).unwrap()).unwrap()
}

proptest! {
    #[test]
    fn psi_is_non_decreasing(u in -10.0f64..10.0, v in -10.0f64..10.0) {
        let spec = setup().glued().unwrap();
        let (x, y) = if u <= v { (u, v) } else { (v, u) };
        let (px, py) = (spec.eval(x), spec.eval(y));
        prop_assert!(px <= py);
        prop_assert!(px > 0.0);
        if x < y && px == py {
            prop_assert!(spec.plateaus().contains(&px));
        }
    }

    #[test]
    fn psi_inverse_reproduces_values(x in 0.05f64..1.2) {
        let spec = setup().glued().unwrap();
        let y = spec.eval(x);
        let xi = spec.inv(y).unwrap();
        prop_assert!((spec.eval(xi) - y).abs() <= 1e-9 * y);
    }

    #[test]
    fn bound_never_exceeds_c1(n in 1usize..=64, delta in 1e-3f64..0.125) {
        let s = setup();
        if let Ok(p) = thm1_bound_detail(&s.consts, &s.psi, s.cs.tau1(), delta, n) {
            prop_assert!(p.raw < s.consts.c1);
            prop_assert!(p.clamped >= 0.0);
        }
    }

    #[test]
    fn bound_raw_matches_c1_formula_for_affine_psi(n in 1usize..=64, slope in 1e3f64..1e12) {
        let s = setup();
        let psi = Psi::Affine { slope, intercept: 0.0 };
        let p = thm1_bound_detail(&s.consts, &psi, s.cs.tau1(), 0.1, n).unwrap();
        let x = p.d_n / slope;
        let expect = s.consts.c1 * (-x * x / s.consts.beta).exp() - s.consts.c2 / n as f64;
        prop_assert!((p.raw - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
    }

    /// Shifting one observation by `eps` moves the conditional mean by
    /// `eps` times the hat function of that site.
    #[test]
    fn conditional_mean_is_linear_in_data(
        s1 in 0.01f64..0.04, s2 in 0.05f64..0.09, probe in 0.001f64..0.099, eps in -1.0f64..1.0,
    ) {
        let delta = 0.1;
        let base = observations(&[s1, s2], &[0.3, -0.2], delta, 0.5);
        let moved = observations(&[s1, s2], &[0.3 + eps, -0.2], delta, 0.5);
        let hat = if probe <= s1 { probe / s1 } else if probe < s2 { (s2 - probe) / (s2 - s1) } else { 0.0 };
        let change = conditional_mean(&moved, probe).unwrap() - conditional_mean(&base, probe).unwrap();
        prop_assert!((change - eps * hat).abs() < 1e-12);
        let c0 = conditional_cov(&base, probe, probe).unwrap();
        prop_assert_eq!(c0, conditional_cov(&moved, probe, probe).unwrap());
        prop_assert!(c0 >= 0.0);
    }

    /// Conditional covariance is symmetric and zero across an observation.
    #[test]
    fn conditional_cov_structure(r in 0.001f64..0.099, t in 0.001f64..0.099) {
        let obs = observations(&[0.05], &[0.1], 0.1, 0.0);
        let a = conditional_cov(&obs, r, t).unwrap();
        prop_assert_eq!(a, conditional_cov(&obs, t, r).unwrap());
        if (r < 0.05) != (t < 0.05) {
            prop_assert_eq!(a, 0.0);
        }
        prop_assert!(a * a <= conditional_cov(&obs, r, r).unwrap() * conditional_cov(&obs, t, t).unwrap() + 1e-18);
    }
}
