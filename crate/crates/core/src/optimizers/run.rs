use super::averaging::{AveragingWeights, RunningAverage};
use super::params::{phb_theory_gamma, pn_params_for_gamma, pn_theory_params, PnParams};
use super::phb::{phb_step, PhbState};
use super::pn::{pn_step, PnState};
use super::prime_preconditioner;
use crate::error::{Error, Result};
use crate::numerics::{DenseVector, DiagMatrix};
use crate::objectives::{Objective, ObjectiveConstants, ReferenceSolution};
use crate::preconditioners::{Beta2Schedule, InitialScaling, PrecondRule, Variant, DEFAULT_FLOOR_E};
use crate::rng::RngStream;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// PHB with `β₁ = 0` and no scaling.
    Gd,
    /// PHB with no scaling.
    HeavyBall,
    /// PN with no scaling.
    Nesterov,
    Phb,
    Pn,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Gd, Method::HeavyBall, Method::Nesterov, Method::Phb, Method::Pn];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Gd => "gd",
            Method::HeavyBall => "heavy-ball",
            Method::Nesterov => "nesterov",
            Method::Phb => "phb",
            Method::Pn => "pn",
        }
    }

    pub fn is_nesterov(&self) -> bool {
        matches!(self, Method::Nesterov | Method::Pn)
    }

    pub fn is_scaled(&self) -> bool {
        matches!(self, Method::Phb | Method::Pn)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecondConfig {
    pub rule: PrecondRule,
    pub initial: InitialScaling,
    pub floor_e: f64,
}

impl Default for PrecondConfig {
    fn default() -> Self {
        Self {
            rule: PrecondRule::adam(Beta2Schedule::default()),
            initial: InitialScaling::FirstInformation,
            floor_e: DEFAULT_FLOOR_E,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepSize {
    Fixed(f64),
    /// PHB: `(1−β₁)²e/(12L)`; PN: `e/L` with matching `ξ`, `θ`.
    Theory,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StopRule {
    /// Stop once `‖∇f‖² ≤ tol`.
    GradSqNorm(f64),
    /// Stop once `f − f* ≤ tol`; needs a reference solution.
    Suboptimality(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub precond: PrecondConfig,
    pub step: StepSize,
    pub beta1: f64,
    /// Overrides the PN extrapolation weight; `θ = ξ/(1+ξ)`.
    pub xi: Option<f64>,
    /// Declared `(e, Γ)`. When absent, theory runs measure them with a pilot run.
    pub bounds: Option<(f64, f64)>,
    pub iterations: usize,
    pub stop: StopRule,
    pub record_every: usize,
    pub seed: u64,
    /// Also report the geometrically weighted average of the PHB iterates.
    pub averaging: bool,
    pub x0: Option<DenseVector>,
    /// Enables the suboptimality and distance columns.
    pub reference: Option<ReferenceSolution>,
}

impl RunConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            precond: PrecondConfig::default(),
            step: StepSize::Fixed(1e-2),
            beta1: 0.9,
            xi: None,
            bounds: None,
            iterations: 1000,
            stop: StopRule::GradSqNorm(0.0),
            record_every: 1,
            seed: 0,
            averaging: false,
            x0: None,
            reference: None,
        }
    }

    /// The rule and initial scaling actually used; unscaled baselines
    /// always run with the identity.
    pub fn effective_precond(&self) -> PrecondConfig {
        if self.method.is_scaled() {
            self.precond
        } else {
            PrecondConfig {
                rule: PrecondRule::identity(),
                initial: InitialScaling::Identity,
                floor_e: self.precond.floor_e,
            }
        }
    }

    pub fn effective_beta1(&self) -> f64 {
        match self.method {
            Method::Gd => 0.0,
            _ => self.beta1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let beta1 = self.effective_beta1();
        if !(0.0..1.0).contains(&beta1) {
            return Err(Error::InvalidConfig(format!("beta1 must lie in [0, 1), got {beta1}")));
        }
        if let StepSize::Fixed(g) = self.step {
            if !(g > 0.0) || !g.is_finite() {
                return Err(Error::InvalidConfig(format!("gamma must be > 0, got {g}")));
            }
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iteration budget must be >= 1".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidConfig("record interval must be >= 1".into()));
        }
        if let Some((e, g)) = self.bounds {
            if !(e > 0.0) || !(g >= e) || !g.is_finite() {
                return Err(Error::InvalidConstants(format!(
                    "need 0 < e <= Gamma, got e = {e}, Gamma = {g}"
                )));
            }
        }
        match self.stop {
            StopRule::GradSqNorm(t) | StopRule::Suboptimality(t) if !(t >= 0.0) => {
                return Err(Error::InvalidConfig(format!("tolerance must be >= 0, got {t}")));
            }
            StopRule::Suboptimality(_) if self.reference.is_none() => {
                return Err(Error::InvalidConfig(
                    "suboptimality stopping needs a reference solution".into(),
                ));
            }
            _ => {}
        }
        if self.averaging && self.method.is_nesterov() {
            return Err(Error::InvalidConfig(
                "weighted averaging applies to heavy-ball methods only".into(),
            ));
        }
        if let Some(xi) = self.xi {
            if !(xi >= 0.0) || !xi.is_finite() {
                return Err(Error::InvalidConfig(format!("xi must be >= 0, got {xi}")));
            }
        }
        self.effective_precond().rule.validate()
    }
}

/// Step parameters as actually used by a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedParams {
    pub gamma: f64,
    pub beta1: f64,
    pub pn: Option<PnParams>,
    /// Bounds `(e, Γ)` the parameters were derived from.
    pub e: f64,
    pub big_gamma: f64,
    pub constants: Option<ObjectiveConstants>,
    pub theory: bool,
    pub averaging: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub k: usize,
    pub f: f64,
    pub grad_sq_norm: f64,
    pub elapsed_ms: f64,
    pub dhat_min: f64,
    pub dhat_max: f64,
    pub test_loss: Option<f64>,
    /// `f − f*` at the reported point.
    pub suboptimality: Option<f64>,
    /// `f − f*` at the weighted average of `x_0 … x_{k−1}`.
    pub averaged_suboptimality: Option<f64>,
    /// `‖z_k − x*‖²` in the `D̂_{k−1}` norm, with `z_k = x_k` (PHB) or `x^k` (PN).
    pub dist_sq: Option<f64>,
    /// `‖z_k − x*‖²` in the Euclidean norm.
    pub euclidean_dist_sq: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub method: Method,
    pub records: Vec<RunRecord>,
    /// `x_k` for heavy-ball methods, `x_f^k` for Nesterov methods.
    pub final_x: DenseVector,
    pub averaged_x: Option<DenseVector>,
    pub diverged: bool,
    /// The stopping rule was met before the budget ran out (or at it).
    pub converged: bool,
    pub iterations: usize,
    pub params: ResolvedParams,
    pub observed_min: f64,
    pub observed_max: f64,
    /// `D̂_{−1}`.
    pub initial_dhat: DiagMatrix,
    /// Scaling configuration actually used.
    pub precond: PrecondConfig,
}

impl RunReport {
    pub fn final_f(&self) -> Option<f64> {
        self.records.last().map(|r| r.f)
    }

    /// First recorded iteration whose squared gradient norm is at most `tol`.
    pub fn iterations_to(&self, tol: f64) -> Option<usize> {
        self.records.iter().find(|r| r.grad_sq_norm <= tol).map(|r| r.k)
    }
}

pub fn run(config: &RunConfig, obj: &dyn Objective) -> Result<RunReport> {
    run_with_test(config, obj, None)
}

/// Runs the configured method. `test`, when given, is evaluated at every
/// recorded point for the `test_loss` column.
pub fn run_with_test(config: &RunConfig, obj: &dyn Objective, test: Option<&dyn Objective>) -> Result<RunReport> {
    config.validate()?;
    let pc = config.effective_precond();
    let needs_bounds = config.step == StepSize::Theory || (config.method.is_nesterov() && config.xi.is_none());
    if config.bounds.is_none() && needs_bounds && pc.rule.variant != Variant::Identity {
        // two-phase: measure the scaling range, then rerun with it
        let pilot = execute(config, obj, test, None)?;
        return execute(config, obj, test, Some((pilot.observed_min, pilot.observed_max)));
    }
    execute(config, obj, test, config.bounds)
}

fn resolve(config: &RunConfig, obj: &dyn Objective, e: f64, big_gamma: f64) -> Result<ResolvedParams> {
    let beta1 = config.effective_beta1();
    let theory = config.step == StepSize::Theory;
    let needs_constants = theory || config.averaging || (config.method.is_nesterov() && config.xi.is_none());
    let constants = if needs_constants { Some(obj.constants()?) } else { None };
    let (gamma, pn) = if config.method.is_nesterov() {
        let p = match (config.step, config.xi) {
            (StepSize::Theory, None) => {
                let c = constants.expect("constants resolved");
                pn_theory_params(c.l, c.mu, e, big_gamma)?
            }
            (StepSize::Theory, Some(xi)) => {
                let c = constants.expect("constants resolved");
                PnParams::new(e / c.l, xi, xi / (1.0 + xi))?
            }
            (StepSize::Fixed(g), Some(xi)) => PnParams::new(g, xi, xi / (1.0 + xi))?,
            (StepSize::Fixed(g), None) => pn_params_for_gamma(g, constants.expect("constants resolved").mu, big_gamma)?,
        };
        (p.gamma, Some(p))
    } else {
        let g = match config.step {
            StepSize::Fixed(g) => g,
            StepSize::Theory => phb_theory_gamma(constants.expect("constants resolved").l, e, beta1),
        };
        (g, None)
    };
    let averaging = if config.averaging {
        let c = constants.expect("constants resolved");
        Some(AveragingWeights::new(c.mu, gamma / (1.0 - beta1), big_gamma)?.q)
    } else {
        None
    };
    Ok(ResolvedParams {
        gamma,
        beta1,
        pn,
        e,
        big_gamma,
        constants,
        theory,
        averaging,
    })
}

fn execute(
    config: &RunConfig,
    obj: &dyn Objective,
    test: Option<&dyn Objective>,
    bounds: Option<(f64, f64)>,
) -> Result<RunReport> {
    let start = Instant::now();
    let d = obj.dim();
    let x0 = config.x0.clone().unwrap_or_else(|| DenseVector::zeros(d));
    x0.check_dim(d)?;
    let pc = config.effective_precond();
    let rule = pc.rule;
    let mut rng = RngStream::new(config.seed);

    let (f0, g0) = obj.eval_grad(&x0)?;
    if !f0.is_finite() || !g0.is_finite() {
        return Err(Error::NonFinite("starting point"));
    }
    let (before, mut precond) = prime_preconditioner(&rule, pc.initial, pc.floor_e, obj, &x0, &g0, &mut rng)?;
    let (e, big_gamma) = bounds.unwrap_or((precond.observed_min(), precond.observed_max()));
    let params = resolve(config, obj, e, big_gamma)?;
    let reference = config.reference.as_ref();
    if let Some(r) = reference {
        r.x_star.check_dim(d)?;
    }

    let mut avg = params.averaging.map(|q| {
        RunningAverage::new(AveragingWeights {
            f: params.gamma / (1.0 - params.beta1),
            q,
        })
    });
    let heavy_ball = !config.method.is_nesterov();
    let mut phb = PhbState {
        x: x0.clone(),
        v: DenseVector::zeros(d),
        k: 0,
        f: f0,
        grad: g0.clone(),
    };
    let mut pn = PnState {
        x: x0.clone(),
        x_f: x0.clone(),
        x_g: x0.clone(),
        k: 0,
        grad_g: g0.clone(),
    };
    let mut prev_dhat = before.dhat().clone();
    let mut records = Vec::new();
    let mut diverged = false;
    let mut converged = false;
    let mut k = 0;
    let mut final_x = x0.clone();

    loop {
        let (f, g_sq) = if heavy_ball {
            (phb.f, phb.grad.norm_sq())
        } else if k == 0 {
            (f0, g0.norm_sq())
        } else {
            let (f, g) = obj.eval_grad(&pn.x_f)?;
            (f, g.norm_sq())
        };
        if !f.is_finite() || !g_sq.is_finite() {
            diverged = true;
            break;
        }
        let (x_rep, z) = if heavy_ball { (&phb.x, &phb.x) } else { (&pn.x_f, &pn.x) };
        final_x = x_rep.clone();

        let suboptimality = reference.map(|r| obj.suboptimality(x_rep, r)).transpose()?;
        let met = match config.stop {
            StopRule::GradSqNorm(tol) => g_sq <= tol,
            StopRule::Suboptimality(tol) => suboptimality.is_some_and(|s| s <= tol),
        };
        let stop = met || k >= config.iterations;
        if k % config.record_every == 0 || stop {
            let averaged_suboptimality = match (reference, avg.as_ref().and_then(|a| a.value())) {
                (Some(r), Some(xa)) => Some(obj.suboptimality(&xa, r)?),
                _ => None,
            };
            let offset = reference.map(|r| z.sub(&r.x_star));
            let dist_sq = offset.as_ref().map(|o| prev_dhat.norm_sq(o));
            let euclidean_dist_sq = offset.as_ref().map(|o| o.norm_sq());
            records.push(RunRecord {
                k,
                f,
                grad_sq_norm: g_sq,
                elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
                dhat_min: precond.dhat().min_entry(),
                dhat_max: precond.dhat().max_entry(),
                test_loss: test.map(|t| t.eval(x_rep)).transpose()?,
                suboptimality,
                averaged_suboptimality,
                dist_sq,
                euclidean_dist_sq,
            });
        }
        if stop {
            converged = met;
            break;
        }
        if let Some(a) = avg.as_mut() {
            a.push(x_rep);
        }

        let stepped = if heavy_ball {
            phb_step(&phb, obj, &precond, &rule, params.gamma, params.beta1, &mut rng).map(|(s, p)| {
                phb = s;
                p
            })
        } else {
            let p = params.pn.expect("nesterov params resolved");
            pn_step(&pn, obj, &precond, &rule, &p, &mut rng).map(|(s, np)| {
                pn = s;
                np
            })
        };
        match stepped {
            Ok(next) => {
                if reference.is_some() {
                    prev_dhat = precond.dhat().clone();
                }
                precond = next;
            }
            Err(Error::Divergence { .. }) => {
                diverged = true;
                break;
            }
            Err(other) => return Err(other),
        }
        k += 1;
    }

    Ok(RunReport {
        method: config.method,
        records,
        final_x,
        averaged_x: avg.and_then(|a| a.value()),
        diverged,
        converged,
        iterations: k,
        params,
        observed_min: precond.observed_min(),
        observed_max: precond.observed_max(),
        initial_dhat: before.dhat().clone(),
        precond: pc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{solve_reference, Quadratic};

    fn v(entries: &[f64]) -> DenseVector {
        DenseVector::new(entries.to_vec()).unwrap()
    }

    #[test]
    fn unit_step_gd_converges_in_one_step() {
        let obj = Quadratic::identity(1);
        let mut c = RunConfig::new(Method::Gd);
        c.step = StepSize::Fixed(1.0);
        c.x0 = Some(v(&[-3.7]));
        let r = run(&c, &obj).unwrap();
        assert_eq!(r.records.len(), 2);
        assert_eq!(r.records[1].k, 1);
        assert!(r.records[1].grad_sq_norm <= 1e-20);
        assert!(r.converged);
    }

    #[test]
    fn stopping_rule_contract() {
        let obj = Quadratic::synthetic(8, 30.0, false, 2).unwrap();
        for budget in [5, 10_000] {
            let mut c = RunConfig::new(Method::HeavyBall);
            c.step = StepSize::Fixed(0.02);
            c.iterations = budget;
            c.stop = StopRule::GradSqNorm(1e-4);
            let r = run(&c, &obj).unwrap();
            let last = r.records.last().unwrap();
            assert!(last.grad_sq_norm <= 1e-4 || last.k == budget);
            let first_hit = r.records.iter().position(|x| x.grad_sq_norm <= 1e-4);
            assert_eq!(r.records.len(), first_hit.map_or(budget, |i| i.min(budget)) + 1);
        }
    }

    #[test]
    fn adam_phb_decreases_best_so_far() {
        let obj = Quadratic::synthetic(10, 100.0, true, 6).unwrap();
        let mut c = RunConfig::new(Method::Phb);
        c.step = StepSize::Fixed(1e-2);
        c.iterations = 500;
        c.x0 = Some(DenseVector::filled(10, 1.0));
        let r = run(&c, &obj).unwrap();
        assert!(!r.diverged);
        let best_final = r.records.iter().map(|x| x.f).fold(f64::INFINITY, f64::min);
        assert!(best_final < r.records[0].f);
        let mut best = f64::INFINITY;
        for rec in &r.records {
            assert!(rec.f.min(best) <= best);
            best = best.min(rec.f);
        }
    }

    #[test]
    fn divergence_truncates_and_flags() {
        let obj = Quadratic::diagonal(vec![1.0], v(&[0.0])).unwrap();
        let mut c = RunConfig::new(Method::Gd);
        c.step = StepSize::Fixed(1e200);
        c.x0 = Some(v(&[1e150]));
        c.iterations = 50;
        let r = run(&c, &obj).unwrap();
        assert!(r.diverged);
        assert!(r.records.len() < 51);
        assert!(r.records.iter().all(|x| x.f.is_finite()));
    }

    #[test]
    fn baselines_ignore_scaling_rule() {
        let obj = Quadratic::synthetic(4, 10.0, false, 1).unwrap();
        let mut c = RunConfig::new(Method::HeavyBall);
        c.x0 = Some(DenseVector::filled(4, 2.0));
        c.iterations = 20;
        let r = run(&c, &obj).unwrap();
        assert!(r.records.iter().all(|x| x.dhat_min == 1.0 && x.dhat_max == 1.0));
    }

    #[test]
    fn seeds_make_runs_reproducible() {
        let obj = Quadratic::synthetic(6, 40.0, true, 3).unwrap();
        let mut c = RunConfig::new(Method::Pn);
        c.precond.rule = PrecondRule::oasis(Beta2Schedule::Fixed(0.99));
        c.precond.floor_e = 1e-2;
        c.step = StepSize::Fixed(1e-2);
        c.x0 = Some(DenseVector::filled(6, 1.0));
        c.iterations = 100;
        let strip = |r: RunReport| {
            r.records
                .into_iter()
                .map(|x| (x.f, x.grad_sq_norm, x.dhat_min))
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(run(&c, &obj).unwrap()), strip(run(&c, &obj).unwrap()));
    }

    #[test]
    fn reference_columns_and_suboptimality_stop() {
        let obj = Quadratic::synthetic(5, 10.0, false, 3).unwrap();
        let r = solve_reference(&obj).unwrap();
        let mut c = RunConfig::new(Method::Nesterov);
        c.step = StepSize::Theory;
        c.reference = Some(r);
        c.stop = StopRule::Suboptimality(1e-8);
        c.iterations = 10_000;
        let rep = run(&c, &obj).unwrap();
        assert!(rep.converged);
        let last = rep.records.last().unwrap();
        assert!(last.suboptimality.unwrap() <= 1e-8);
        assert!(rep.records.iter().all(|x| x.dist_sq.is_some()));
    }

    #[test]
    fn averaging_reports_weighted_mean() {
        let obj = Quadratic::synthetic(3, 10.0, false, 1).unwrap();
        let r = solve_reference(&obj).unwrap();
        let mut c = RunConfig::new(Method::Phb);
        c.step = StepSize::Theory;
        c.bounds = Some((0.5, 2.0));
        c.precond.rule = PrecondRule::identity();
        c.averaging = true;
        c.reference = Some(r);
        c.iterations = 30;
        let rep = run(&c, &obj).unwrap();
        assert!(rep.averaged_x.is_some());
        assert!(rep.records[0].averaged_suboptimality.is_none());
        assert!(rep.records[1..].iter().all(|x| x.averaged_suboptimality.is_some()));
    }

    #[test]
    fn invalid_configs_rejected() {
        let obj = Quadratic::identity(2);
        let mut c = RunConfig::new(Method::Phb);
        c.beta1 = 1.0;
        assert!(run(&c, &obj).is_err());
        let mut c = RunConfig::new(Method::Pn);
        c.averaging = true;
        assert!(run(&c, &obj).is_err());
        let mut c = RunConfig::new(Method::Gd);
        c.stop = StopRule::Suboptimality(1e-3);
        assert!(run(&c, &obj).is_err());
        assert!("sgd".parse::<Method>().is_err());
        assert_eq!("heavy-ball".parse::<Method>().unwrap(), Method::HeavyBall);
    }
}
