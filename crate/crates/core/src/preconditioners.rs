//! Diagonal scaling matrices: update rules, curvature sources, clamping and
//! bound tracking.

use crate::error::{Error, Result};
use crate::numerics::{DenseVector, DiagMatrix};
use crate::objectives::Objective;
use crate::rng::RngStream;
use serde::{Deserialize, Serialize};

pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_FLOOR_E: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    Identity,
    /// `D_k = √(D²_{k−1} + H²_k)`
    AdaGrad,
    /// `D_k = √(β₂D²_{k−1} + (1−β₂)H²_k)` (Adam / RMSProp)
    QuadraticSmoothing,
    /// `D_k = β₂D_{k−1} + (1−β₂)H_k` (OASIS)
    LinearSmoothing,
}

/// Where the per-step information `H_k` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InfoSource {
    /// `H = diag(|∇f(x)|)`, so that `H² = diag(∇f ⊙ ∇f)`.
    GradientSquare,
    /// `H = diag(v ⊙ ∇²f(x)v)` with Rademacher `v`.
    Hutchinson,
}

/// Which copy of the previous matrix the smoothing rule is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chaining {
    /// Unclamped for the quadratic and AdaGrad rules, clamped for the linear rule.
    Default,
    /// Always the unclamped running matrix.
    Unclamped,
    /// Always the clamped matrix.
    Clamped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Beta2Schedule {
    Fixed(f64),
    /// `1 − 1/k` at the k-th update.
    InverseK,
    /// `1 − 1/K` for an iteration budget `K`.
    InverseHorizon(usize),
}

impl Default for Beta2Schedule {
    fn default() -> Self {
        Beta2Schedule::Fixed(DEFAULT_BETA2)
    }
}

impl Beta2Schedule {
    pub fn value(&self, k: usize) -> Result<f64> {
        match *self {
            Beta2Schedule::Fixed(b) => Ok(b),
            Beta2Schedule::InverseK => {
                if k == 0 {
                    return Err(Error::UndefinedSchedule("1 - 1/k needs k >= 1".into()));
                }
                Ok(1.0 - 1.0 / k as f64)
            }
            Beta2Schedule::InverseHorizon(big_k) => {
                if big_k == 0 {
                    return Err(Error::UndefinedSchedule("1 - 1/K needs K >= 1".into()));
                }
                Ok(1.0 - 1.0 / big_k as f64)
            }
        }
    }
}

pub fn beta2_schedule(schedule: Beta2Schedule, k: usize) -> Result<f64> {
    schedule.value(k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecondRule {
    pub variant: Variant,
    pub beta2: Beta2Schedule,
    pub source: InfoSource,
    pub chaining: Chaining,
    /// Rademacher probes averaged per Hutchinson estimate.
    pub probes: usize,
}

impl PrecondRule {
    pub fn identity() -> Self {
        Self {
            variant: Variant::Identity,
            beta2: Beta2Schedule::default(),
            source: InfoSource::GradientSquare,
            chaining: Chaining::Default,
            probes: 1,
        }
    }

    pub fn adagrad() -> Self {
        Self {
            variant: Variant::AdaGrad,
            ..Self::identity()
        }
    }

    pub fn adam(beta2: Beta2Schedule) -> Self {
        Self {
            variant: Variant::QuadraticSmoothing,
            beta2,
            ..Self::identity()
        }
    }

    pub fn oasis(beta2: Beta2Schedule) -> Self {
        Self {
            variant: Variant::LinearSmoothing,
            beta2,
            source: InfoSource::Hutchinson,
            ..Self::identity()
        }
    }

    pub fn with_chaining(mut self, chaining: Chaining) -> Self {
        self.chaining = chaining;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Beta2Schedule::Fixed(b) = self.beta2 {
            let smoothing = matches!(self.variant, Variant::QuadraticSmoothing | Variant::LinearSmoothing);
            if smoothing && !(b > 0.0 && b < 1.0) {
                return Err(Error::InvalidConfig(format!("beta2 must lie in (0, 1), got {b}")));
            }
        }
        if self.probes == 0 {
            return Err(Error::InvalidConfig("at least one Hutchinson probe is required".into()));
        }
        Ok(())
    }

    fn smooths_clamped(&self) -> bool {
        match self.chaining {
            Chaining::Clamped => true,
            Chaining::Unclamped => false,
            Chaining::Default => self.variant == Variant::LinearSmoothing,
        }
    }
}

/// Starting matrix `D_{−1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitialScaling {
    Identity,
    Constant(f64),
    /// `D_{−1} = |H_0|`, the information at the starting point.
    FirstInformation,
}

/// `C` such that `‖x‖²_{D̂_{k+1}} ≤ (1 + (1−β₂)C)‖x‖²_{D̂_k}`; `None` for
/// AdaGrad, which the bound does not cover.
#[allow(non_snake_case)]
pub fn theory_C(variant: Variant, e: f64, gamma: f64) -> Option<f64> {
    match variant {
        Variant::Identity => Some(0.0),
        Variant::AdaGrad => None,
        Variant::QuadraticSmoothing => Some(gamma * gamma / (2.0 * e * e)),
        Variant::LinearSmoothing => Some(2.0 * gamma / e),
    }
}

/// The information `H` at `x`, given the gradient there. Hutchinson
/// estimates may have negative entries.
pub fn information_with_gradient(
    rule: &PrecondRule,
    obj: &dyn Objective,
    x: &DenseVector,
    grad: &DenseVector,
    rng: &mut RngStream,
) -> Result<DenseVector> {
    grad.check_dim(obj.dim())?;
    match (rule.variant, rule.source) {
        (Variant::Identity, _) => Ok(DenseVector::filled(obj.dim(), 1.0)),
        (_, InfoSource::GradientSquare) => Ok(grad.map(f64::abs)),
        (_, InfoSource::Hutchinson) => {
            if !obj.has_hessian_vec() {
                return Err(Error::HessianUnavailable);
            }
            let mut acc = DenseVector::zeros(obj.dim());
            for _ in 0..rule.probes {
                let v = rng.rademacher(obj.dim());
                let hv = obj.hessian_vec(x, &v)?;
                for ((a, vi), hi) in acc.as_mut_slice().iter_mut().zip(v.iter()).zip(hv.iter()) {
                    *a += vi * hi;
                }
            }
            Ok(acc.scaled(1.0 / rule.probes as f64))
        }
    }
}

pub fn information_matrix(
    rule: &PrecondRule,
    obj: &dyn Objective,
    x: &DenseVector,
    rng: &mut RngStream,
) -> Result<DenseVector> {
    let g = obj.grad(x)?;
    information_with_gradient(rule, obj, x, &g, rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreconditionerState {
    running: DenseVector,
    clamped: DiagMatrix,
    floor_e: f64,
    observed_min: f64,
    observed_max: f64,
    step: usize,
}

fn clamp(values: &DenseVector, floor_e: f64) -> Result<DiagMatrix> {
    DiagMatrix::new(values.map(|v| v.max(floor_e)))
}

impl PreconditionerState {
    /// State holding `D_{−1}`; `h0` is only read for `FirstInformation`.
    pub fn new(rule: &PrecondRule, init: InitialScaling, floor_e: f64, h0: &DenseVector) -> Result<Self> {
        let d = h0.len();
        let running = match (rule.variant, init) {
            (Variant::Identity, _) | (_, InitialScaling::Identity) => DenseVector::filled(d, 1.0),
            (_, InitialScaling::Constant(c)) => {
                if !(c > 0.0) || !c.is_finite() {
                    return Err(Error::InvalidConfig(format!("initial scaling must be > 0, got {c}")));
                }
                DenseVector::filled(d, c)
            }
            (_, InitialScaling::FirstInformation) => h0.map(f64::abs),
        };
        Self::from_running(running, floor_e)
    }

    pub fn from_running(running: DenseVector, floor_e: f64) -> Result<Self> {
        if !(floor_e > 0.0) || !floor_e.is_finite() {
            return Err(Error::InvalidConfig(format!("floor e must be > 0, got {floor_e}")));
        }
        if !running.is_finite() {
            return Err(Error::NonFinite("preconditioner"));
        }
        let clamped = clamp(&running, floor_e)?;
        Ok(Self {
            observed_min: clamped.min_entry(),
            observed_max: clamped.max_entry(),
            running,
            clamped,
            floor_e,
            step: 0,
        })
    }

    /// The clamped matrix `D̂` used by the optimizers.
    pub fn dhat(&self) -> &DiagMatrix {
        &self.clamped
    }

    /// The unclamped running matrix `D`.
    pub fn running(&self) -> &DenseVector {
        &self.running
    }

    pub fn floor_e(&self) -> f64 {
        self.floor_e
    }

    /// Smallest entry of any `D̂` seen so far (empirical `e`).
    pub fn observed_min(&self) -> f64 {
        self.observed_min
    }

    /// Largest entry of any `D̂` seen so far (empirical `Γ`).
    pub fn observed_max(&self) -> f64 {
        self.observed_max
    }

    /// Number of updates applied.
    pub fn step(&self) -> usize {
        self.step
    }

    pub fn dim(&self) -> usize {
        self.running.len()
    }

    /// Applies one update with information `h` and clamps the result.
    pub fn update(&self, rule: &PrecondRule, h: &DenseVector) -> Result<Self> {
        h.check_dim(self.dim())?;
        if !h.is_finite() {
            return Err(Error::NonFinite("information matrix"));
        }
        let step = self.step + 1;
        let base = if rule.smooths_clamped() {
            self.clamped.diag()
        } else {
            &self.running
        };
        let running = match rule.variant {
            Variant::Identity => DenseVector::filled(self.dim(), 1.0),
            Variant::AdaGrad => DenseVector::from_vec_unchecked(
                base.iter().zip(h.iter()).map(|(d, h)| (d * d + h * h).sqrt()).collect(),
            ),
            Variant::QuadraticSmoothing => {
                if let Some((index, &value)) = base.iter().enumerate().find(|(_, v)| **v < 0.0) {
                    return Err(Error::StateCorruption { index, value });
                }
                let b = rule.beta2.value(step)?;
                DenseVector::from_vec_unchecked(
                    base.iter()
                        .zip(h.iter())
                        .map(|(d, h)| (b * d * d + (1.0 - b) * h * h).sqrt())
                        .collect(),
                )
            }
            Variant::LinearSmoothing => {
                let b = rule.beta2.value(step)?;
                DenseVector::from_vec_unchecked(base.iter().zip(h.iter()).map(|(d, h)| b * d + (1.0 - b) * h).collect())
            }
        };
        if !running.is_finite() {
            return Err(Error::NonFinite("preconditioner"));
        }
        let clamped = clamp(&running, self.floor_e)?;
        Ok(Self {
            observed_min: self.observed_min.min(clamped.min_entry()),
            observed_max: self.observed_max.max(clamped.max_entry()),
            running,
            clamped,
            floor_e: self.floor_e,
            step,
        })
    }
}
