use super::params::PnParams;
use crate::error::{Error, Result};
use crate::numerics::DenseVector;
use crate::objectives::Objective;
use crate::preconditioners::{information_with_gradient, PrecondRule, PreconditionerState};
use crate::rng::RngStream;

/// Iterates `x^k`, `x_f^k`, `x_g^k` and the gradient at `x_g^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PnState {
    pub x: DenseVector,
    pub x_f: DenseVector,
    pub x_g: DenseVector,
    pub k: usize,
    pub grad_g: DenseVector,
}

impl PnState {
    pub fn new(obj: &dyn Objective, x0: DenseVector) -> Result<Self> {
        let grad_g = obj.grad(&x0)?;
        if !grad_g.is_finite() {
            return Err(Error::Divergence { iteration: 0 });
        }
        Ok(Self {
            x_f: x0.clone(),
            x_g: x0.clone(),
            x: x0,
            k: 0,
            grad_g,
        })
    }
}

/// `x_f^{k+1} = x_g^k − γD̂_k⁻¹∇f(x_g^k)`,
/// `x^{k+1} = ξx_f^{k+1} + (1−ξ)x_f^k`,
/// `x_g^{k+1} = θx_f^{k+1} + (1−θ)x^{k+1}`,
/// then the preconditioner update with information at `x_g^{k+1}`.
pub fn pn_step(
    state: &PnState,
    obj: &dyn Objective,
    precond: &PreconditionerState,
    rule: &PrecondRule,
    params: &PnParams,
    rng: &mut RngStream,
) -> Result<(PnState, PreconditionerState)> {
    let iteration = state.k + 1;
    let x_f = state
        .x_g
        .lincomb(1.0, &precond.dhat().solve(&state.grad_g), -params.gamma);
    let x = x_f.lincomb(params.xi, &state.x_f, 1.0 - params.xi);
    let x_g = x_f.lincomb(params.theta, &x, 1.0 - params.theta);
    if !x_g.is_finite() || !x.is_finite() {
        return Err(Error::Divergence { iteration });
    }
    let grad_g = obj.grad(&x_g)?;
    if !grad_g.is_finite() {
        return Err(Error::Divergence { iteration });
    }
    let h = information_with_gradient(rule, obj, &x_g, &grad_g, rng)?;
    let next = precond.update(rule, &h).map_err(|e| match e {
        Error::NonFinite(_) => Error::Divergence { iteration },
        other => other,
    })?;
    Ok((
        PnState {
            x,
            x_f,
            x_g,
            k: iteration,
            grad_g,
        },
        next,
    ))
}
