//! Preconditioned heavy-ball (PHB) and preconditioned Nesterov (PN)
//! methods, their theoretical parameters, and the run driver.

mod averaging;
mod params;
mod phb;
mod pn;
mod run;
mod tune;

pub use averaging::{averaged_output, AveragingWeights, RunningAverage};
pub use params::{phb_theory_gamma, pn_params_for_gamma, pn_theory_params, PnParams};
pub use phb::{phb_step, PhbState};
pub use pn::{pn_step, PnState};
pub use run::{
    run, run_with_test, Method, PrecondConfig, ResolvedParams, RunConfig, RunRecord, RunReport, StepSize, StopRule,
};
pub use tune::{default_grid, tune, Selection, TuneEntry, TuneReport, TuneStatus};

use crate::error::Result;
use crate::numerics::DenseVector;
use crate::objectives::Objective;
use crate::preconditioners::{information_with_gradient, InitialScaling, PrecondRule, PreconditionerState};
use crate::rng::RngStream;

/// Builds `D_{−1}` from the initial scaling and applies the first update
/// with the information at `x0`, giving `D̂_0`. Returns both states.
pub fn prime_preconditioner(
    rule: &PrecondRule,
    initial: InitialScaling,
    floor_e: f64,
    obj: &dyn Objective,
    x0: &DenseVector,
    g0: &DenseVector,
    rng: &mut RngStream,
) -> Result<(PreconditionerState, PreconditionerState)> {
    rule.validate()?;
    let h0 = information_with_gradient(rule, obj, x0, g0, rng)?;
    let before = PreconditionerState::new(rule, initial, floor_e, &h0)?;
    let first = before.update(rule, &h0)?;
    Ok((before, first))
}
