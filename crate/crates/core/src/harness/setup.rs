use std::sync::Arc;

use crate::coeffs::{derived_constants, make_coeffs, CoefficientSet, DerivedConstants};
use crate::error::{Error, Result};
use crate::harness::config::{ExperimentConfig, PsiChoice, SchemeConfig};
use crate::psi::{compute_knots, compute_n0, PlanVars, Psi, PsiSpec, RatePlan};
use crate::schemes::{AdaptiveScheme, Estimator, EulerEquidistant, FixedSites, GapRefiner, Problem, RunSettings};

/// Everything derived from a config before any path is sampled.
#[derive(Debug, Clone)]
pub struct Setup {
    pub config: ExperimentConfig,
    pub cs: CoefficientSet,
    /// Constants of the coefficients; all bounds use these.
    pub consts: DerivedConstants,
    /// Constants the glued `psi` was built from; differ from `consts` only
    /// under a perturbation.
    pub psi_consts: DerivedConstants,
    pub plan: RatePlan,
    pub psi: Psi,
    /// Least admissible index for `consts`, if the prefix contains one.
    pub n0: Option<usize>,
    pub problem: Arc<Problem>,
}

impl Setup {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let cs = make_coeffs(&config.coefficients)?;
        let consts = derived_constants(&cs, config.quad_tol)?;
        let vars = PlanVars {
            t_end: cs.t_end(),
            tau1: cs.tau1(),
            tau2: cs.tau2(),
        };
        let plan = RatePlan::from_expressions(&config.plan.a, &config.plan.delta, config.plan.prefix_len, vars)?;
        let psi_consts = if config.perturb.beta_factor == 1.0 {
            consts
        } else {
            DerivedConstants::from_parts(consts.alpha, consts.beta * config.perturb.beta_factor, consts.gamma)
        };
        let psi = match &config.psi {
            PsiChoice::Glued => Psi::Glued(compute_knots(&plan, &psi_consts, cs.tau1())?),
            PsiChoice::Constant { value } => Psi::Constant { value: *value },
            PsiChoice::Affine { slope, intercept } => Psi::Affine {
                slope: *slope,
                intercept: *intercept,
            },
            PsiChoice::File { path } => Psi::Glued(PsiSpec::from_json(&std::fs::read_to_string(path)?)?),
        };
        let n0 = compute_n0(&plan, consts.c1, consts.c2).ok();
        let problem = Problem::new(cs.clone(), psi.clone())?;
        Ok(Setup {
            config: config.clone(),
            cs,
            consts,
            psi_consts,
            plan,
            psi,
            n0,
            problem,
        })
    }

    pub fn glued(&self) -> Option<&PsiSpec> {
        match &self.psi {
            Psi::Glued(s) => Some(s),
            _ => None,
        }
    }

    /// The `N` values of an error curve.
    pub fn n_list(&self) -> Result<Vec<usize>> {
        if let Some(ns) = &self.config.n_list {
            return Ok(ns.clone());
        }
        let n0 = self.n0.ok_or(Error::NoAdmissibleIndex {
            prefix_len: self.plan.len(),
            c1: self.consts.c1,
            c2: self.consts.c2,
        })?;
        Ok((n0..=n0 + 8).collect())
    }

    /// `delta` used with `N` evaluations.
    pub fn delta_for(&self, n: usize) -> Result<f64> {
        match self.config.delta {
            Some(d) => Ok(d),
            None => self.plan.delta(n),
        }
    }

    pub fn settings(&self, delta: f64) -> RunSettings {
        RunSettings {
            delta,
            tail_points: 1usize << self.config.tail_grid_exp,
            nu_cap: self.config.nu_cap,
        }
    }

    /// The member of a scheme family sized for `n` evaluations in `(0, delta)`.
    pub fn build_scheme(&self, sc: &SchemeConfig, n: usize, delta: f64) -> Result<Box<dyn AdaptiveScheme>> {
        let p = self.problem.clone();
        Ok(match *sc {
            SchemeConfig::Euler => {
                let steps = ((n as f64) * self.cs.t_end() / delta).floor().max(1.0) as usize;
                Box::new(EulerEquidistant::new(p, steps)?)
            }
            SchemeConfig::GapRefiner => Box::new(GapRefiner::new(p, n)?),
            SchemeConfig::CondMean { inner_mc } => Box::new(FixedSites::equidistant(
                p,
                delta,
                n,
                Estimator::ConditionalMean { inner_mc },
            )?),
            SchemeConfig::CondMedian { inner_mc } => Box::new(FixedSites::equidistant(
                p,
                delta,
                n,
                Estimator::ConditionalMedian { inner_mc },
            )?),
            SchemeConfig::FixedEuler => Box::new(FixedSites::equidistant(p, delta, n, Estimator::InducedEuler)?),
        })
    }
}
