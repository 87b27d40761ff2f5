use super::trace::TraceSpec;
use crate::error::{Error, Result};
use crate::numerics::DenseVector;
use crate::objectives::{Objective, Quadratic, ReferenceSolution};
use crate::optimizers::{phb_theory_gamma, pn_theory_params, Method, PnParams, PrecondConfig, RunConfig, StepSize};
use crate::preconditioners::{theory_C, Beta2Schedule, InitialScaling, PrecondRule, Variant};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    HeavyBall { beta1: f64 },
    Nesterov,
}

/// A preconditioner configuration whose scaling range is provably inside
/// the declared `(e, Γ)`, together with the step parameters and the
/// smallest `β₂` the convergence guarantees accept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheorySetup {
    pub rule: PrecondRule,
    pub initial: InitialScaling,
    pub floor_e: f64,
    pub bounds: (f64, f64),
    pub gamma: f64,
    pub beta1: f64,
    pub pn: Option<PnParams>,
    pub beta2: f64,
}

/// Builds a setup on a quadratic started at `x0`.
///
/// With `D_{−1} = cI`, floor `c/4` and `c` an upper bound on every `|H_i|`
/// met along the run, all entries stay in `[c/4, c]`:
/// - gradient square: `|∇f(x)_i| ≤ L‖x − x*‖`, with `c = 2L‖x0 − x*‖`;
/// - Hutchinson with Rademacher probes: `|v_i (Av)_i| ≤ Σ_j |A_ij|`.
///
/// The gradient bound assumes iterates stay within twice the starting
/// distance; callers confirm it from the recorded range.
pub fn theory_setup(
    obj: &Quadratic,
    x0: &DenseVector,
    reference: &ReferenceSolution,
    variant: Variant,
    target: Target,
) -> Result<TheorySetup> {
    let c = obj.constants()?;
    let (rule, initial, floor_e, bounds) = match variant {
        Variant::Identity => (PrecondRule::identity(), InitialScaling::Identity, 1.0, (1.0, 1.0)),
        Variant::QuadraticSmoothing | Variant::LinearSmoothing => {
            let top = if variant == Variant::QuadraticSmoothing {
                2.0 * c.l * x0.sub(&reference.x_star).norm()
            } else {
                obj.max_abs_row_sum()
            };
            if !(top > 0.0) {
                return Err(Error::InvalidConfig("starting point is the minimizer".into()));
            }
            let rule = if variant == Variant::QuadraticSmoothing {
                PrecondRule::adam(Beta2Schedule::Fixed(0.0))
            } else {
                PrecondRule::oasis(Beta2Schedule::Fixed(0.0))
            };
            (rule, InitialScaling::Constant(top), top / 4.0, (top / 4.0, top))
        }
        Variant::AdaGrad => return Err(Error::NotApplicable("AdaGrad has no theoretical setup".into())),
    };
    let (e, big_gamma) = bounds;
    let cc = theory_C(variant, e, big_gamma).expect("covered variants");
    let (gamma, beta1, pn, beta2) = match target {
        Target::HeavyBall { beta1 } => {
            let gamma = phb_theory_gamma(c.l, e, beta1);
            let big_f = gamma / (1.0 - beta1);
            let beta2 = if cc > 0.0 {
                1.0 - c.mu * big_f / (4.0 * big_gamma * cc)
            } else {
                0.0
            };
            (gamma, beta1, None, beta2)
        }
        Target::Nesterov => {
            let p = pn_theory_params(c.l, c.mu, e, big_gamma)?;
            let beta2 = if cc > 0.0 {
                1.0 - (c.mu * e / (c.l * big_gamma)).sqrt() / (2.0 * cc)
            } else {
                0.0
            };
            (p.gamma, 0.0, Some(p), beta2)
        }
    };
    let rule = match variant {
        Variant::Identity => rule,
        _ => PrecondRule {
            beta2: Beta2Schedule::Fixed(beta2),
            ..rule
        },
    };
    Ok(TheorySetup {
        rule,
        initial,
        floor_e,
        bounds,
        gamma,
        beta1,
        pn,
        beta2,
    })
}

impl TheorySetup {
    pub fn trace_spec(&self, iterations: usize) -> TraceSpec {
        TraceSpec::new(self.rule, self.initial, self.floor_e, iterations)
    }

    /// Theory-parameter run with every iteration recorded.
    pub fn run_config(
        &self,
        method: Method,
        iterations: usize,
        x0: DenseVector,
        reference: ReferenceSolution,
    ) -> RunConfig {
        let mut c = RunConfig::new(method);
        c.precond = PrecondConfig {
            rule: self.rule,
            initial: self.initial,
            floor_e: self.floor_e,
        };
        c.step = StepSize::Theory;
        c.beta1 = self.beta1;
        c.bounds = Some(self.bounds);
        c.iterations = iterations;
        c.x0 = Some(x0);
        c.reference = Some(reference);
        c
    }
}
