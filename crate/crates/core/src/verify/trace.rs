use crate::error::{Error, Result};
use crate::numerics::{DenseVector, DiagMatrix};
use crate::objectives::Objective;
use crate::optimizers::{phb_step, pn_step, prime_preconditioner, PhbState, PnParams, PnState};
use crate::preconditioners::{InitialScaling, PrecondRule};
use crate::rng::RngStream;

/// Largest dimension for which full `D̂` snapshots are kept.
pub const FULL_SNAPSHOT_MAX_DIM: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub enum Snapshot {
    Full(DiagMatrix),
    Compressed { min: f64, max: f64 },
}

impl Snapshot {
    fn of(m: &DiagMatrix, full: bool) -> Self {
        if full {
            Snapshot::Full(m.clone())
        } else {
            Snapshot::Compressed {
                min: m.min_entry(),
                max: m.max_entry(),
            }
        }
    }

    pub fn full(&self) -> Result<&DiagMatrix> {
        match self {
            Snapshot::Full(m) => Ok(m),
            Snapshot::Compressed { .. } => Err(Error::NotApplicable(
                "trace holds compressed preconditioner snapshots".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TraceKind {
    Phb { gamma: f64, beta1: f64 },
    Pn(PnParams),
}

/// A recorded trajectory. Index `k` of `dhat` holds `D̂_{k−1}`, so
/// `dhat[0]` is the starting matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyTrace {
    pub kind: TraceKind,
    pub rule: PrecondRule,
    pub floor_e: f64,
    /// PHB: `x_k`; PN: `x^k`.
    pub x: Vec<DenseVector>,
    /// PHB only: `v[k] = V_{k−1}`, with `v[0] = 0`.
    pub v: Vec<DenseVector>,
    /// PN only.
    pub x_f: Vec<DenseVector>,
    /// PN only.
    pub x_g: Vec<DenseVector>,
    pub dhat: Vec<Snapshot>,
    /// PHB: `f(x_k)`; PN: `f(x_f^k)`.
    pub f: Vec<f64>,
    pub grad_sq: Vec<f64>,
    pub observed_min: f64,
    pub observed_max: f64,
}

impl VerifyTrace {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// `x̃_k = x_k − (β₁γ/(1−β₁))V_{k−1}` for PHB traces.
    pub fn virtual_sequence(&self) -> Result<Vec<DenseVector>> {
        let TraceKind::Phb { gamma, beta1 } = self.kind else {
            return Err(Error::NotApplicable("virtual sequence needs a heavy-ball trace".into()));
        };
        let c = beta1 * gamma / (1.0 - beta1);
        Ok(self.x.iter().zip(&self.v).map(|(x, v)| x.lincomb(1.0, v, -c)).collect())
    }

    pub fn is_compressed(&self) -> bool {
        self.dhat.iter().any(|s| matches!(s, Snapshot::Compressed { .. }))
    }
}

/// Preconditioner settings and length of a recorded run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSpec {
    pub rule: PrecondRule,
    pub initial: InitialScaling,
    pub floor_e: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Force compressed snapshots regardless of dimension.
    pub compress: bool,
}

impl TraceSpec {
    pub fn new(rule: PrecondRule, initial: InitialScaling, floor_e: f64, iterations: usize) -> Self {
        Self {
            rule,
            initial,
            floor_e,
            iterations,
            seed: 0,
            compress: false,
        }
    }

    fn full(&self, d: usize) -> bool {
        !self.compress && d <= FULL_SNAPSHOT_MAX_DIM
    }
}

pub fn record_phb(
    obj: &dyn Objective,
    x0: DenseVector,
    spec: &TraceSpec,
    gamma: f64,
    beta1: f64,
) -> Result<VerifyTrace> {
    let full = spec.full(obj.dim());
    let mut rng = RngStream::new(spec.seed);
    let mut state = PhbState::new(obj, x0)?;
    let (before, mut precond) = prime_preconditioner(
        &spec.rule,
        spec.initial,
        spec.floor_e,
        obj,
        &state.x,
        &state.grad,
        &mut rng,
    )?;
    let mut trace = VerifyTrace {
        kind: TraceKind::Phb { gamma, beta1 },
        rule: spec.rule,
        floor_e: spec.floor_e,
        x: vec![state.x.clone()],
        v: vec![state.v.clone()],
        x_f: Vec::new(),
        x_g: Vec::new(),
        dhat: vec![Snapshot::of(before.dhat(), full), Snapshot::of(precond.dhat(), full)],
        f: vec![state.f],
        grad_sq: vec![state.grad.norm_sq()],
        observed_min: precond.observed_min(),
        observed_max: precond.observed_max(),
    };
    for _ in 0..spec.iterations {
        let (s, p) = phb_step(&state, obj, &precond, &spec.rule, gamma, beta1, &mut rng)?;
        state = s;
        precond = p;
        trace.x.push(state.x.clone());
        trace.v.push(state.v.clone());
        trace.f.push(state.f);
        trace.grad_sq.push(state.grad.norm_sq());
        trace.dhat.push(Snapshot::of(precond.dhat(), full));
    }
    trace.observed_min = precond.observed_min();
    trace.observed_max = precond.observed_max();
    Ok(trace)
}

pub fn record_pn(obj: &dyn Objective, x0: DenseVector, spec: &TraceSpec, params: PnParams) -> Result<VerifyTrace> {
    let full = spec.full(obj.dim());
    let mut rng = RngStream::new(spec.seed);
    let mut state = PnState::new(obj, x0)?;
    let (before, mut precond) = prime_preconditioner(
        &spec.rule,
        spec.initial,
        spec.floor_e,
        obj,
        &state.x,
        &state.grad_g,
        &mut rng,
    )?;
    let (f0, g0) = obj.eval_grad(&state.x_f)?;
    let mut trace = VerifyTrace {
        kind: TraceKind::Pn(params),
        rule: spec.rule,
        floor_e: spec.floor_e,
        x: vec![state.x.clone()],
        v: Vec::new(),
        x_f: vec![state.x_f.clone()],
        x_g: vec![state.x_g.clone()],
        dhat: vec![Snapshot::of(before.dhat(), full), Snapshot::of(precond.dhat(), full)],
        f: vec![f0],
        grad_sq: vec![g0.norm_sq()],
        observed_min: precond.observed_min(),
        observed_max: precond.observed_max(),
    };
    for _ in 0..spec.iterations {
        let (s, p) = pn_step(&state, obj, &precond, &spec.rule, &params, &mut rng)?;
        state = s;
        precond = p;
        let (f, g) = obj.eval_grad(&state.x_f)?;
        trace.x.push(state.x.clone());
        trace.x_f.push(state.x_f.clone());
        trace.x_g.push(state.x_g.clone());
        trace.f.push(f);
        trace.grad_sq.push(g.norm_sq());
        trace.dhat.push(Snapshot::of(precond.dhat(), full));
    }
    trace.observed_min = precond.observed_min();
    trace.observed_max = precond.observed_max();
    Ok(trace)
}
