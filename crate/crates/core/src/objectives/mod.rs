//! Strongly convex, smooth objectives with exact derivatives.

mod logistic;
mod quadratic;
mod reference;

pub use logistic::LogisticL2;
pub use quadratic::{QuadMatrix, Quadratic};
pub use reference::{solve_reference, ReferenceCache, ReferenceSolution, CACHE_ENV_VAR};

use crate::error::{Error, Result};
use crate::numerics::DenseVector;
use serde::{Deserialize, Serialize};

/// Smoothness `L` and strong convexity `mu` of an objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveConstants {
    pub l: f64,
    pub mu: f64,
}

impl ObjectiveConstants {
    pub fn new(l: f64, mu: f64) -> Result<Self> {
        if !(mu > 0.0) || !(l >= mu) || !l.is_finite() {
            return Err(Error::InvalidConstants(format!(
                "need 0 < mu <= L, got L = {l}, mu = {mu}"
            )));
        }
        Ok(Self { l, mu })
    }

    pub fn condition_number(&self) -> f64 {
        self.l / self.mu
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjectiveKind {
    Quadratic,
    LogisticL2,
}

pub trait Objective: Send + Sync {
    fn kind(&self) -> ObjectiveKind;

    fn dim(&self) -> usize;

    fn eval(&self, x: &DenseVector) -> Result<f64>;

    fn grad(&self, x: &DenseVector) -> Result<DenseVector>;

    fn eval_grad(&self, x: &DenseVector) -> Result<(f64, DenseVector)> {
        Ok((self.eval(x)?, self.grad(x)?))
    }

    fn hessian_vec(&self, _x: &DenseVector, _v: &DenseVector) -> Result<DenseVector> {
        Err(Error::HessianUnavailable)
    }

    fn has_hessian_vec(&self) -> bool {
        false
    }

    fn constants(&self) -> Result<ObjectiveConstants>;

    /// `f(x) − f*`. Implementations may use a formula that avoids the
    /// cancellation in the plain difference.
    fn suboptimality(&self, x: &DenseVector, reference: &ReferenceSolution) -> Result<f64> {
        Ok(self.eval(x)? - reference.f_star)
    }

    /// Exact minimizer when one is cheaply available.
    fn closed_form_solution(&self) -> Option<Result<DenseVector>> {
        None
    }

    /// Stable content digest, used to key cached reference solutions.
    fn digest(&self) -> String;
}

/// A concrete objective as built by the command-line harness.
#[derive(Debug, Clone)]
pub enum ObjectiveProblem {
    Quadratic(Quadratic),
    Logistic(LogisticL2),
}

impl ObjectiveProblem {
    fn inner(&self) -> &dyn Objective {
        match self {
            ObjectiveProblem::Quadratic(q) => q,
            ObjectiveProblem::Logistic(l) => l,
        }
    }
}

impl From<Quadratic> for ObjectiveProblem {
    fn from(q: Quadratic) -> Self {
        ObjectiveProblem::Quadratic(q)
    }
}

impl From<LogisticL2> for ObjectiveProblem {
    fn from(l: LogisticL2) -> Self {
        ObjectiveProblem::Logistic(l)
    }
}

impl Objective for ObjectiveProblem {
    fn kind(&self) -> ObjectiveKind {
        self.inner().kind()
    }
    fn dim(&self) -> usize {
        self.inner().dim()
    }
    fn eval(&self, x: &DenseVector) -> Result<f64> {
        self.inner().eval(x)
    }
    fn grad(&self, x: &DenseVector) -> Result<DenseVector> {
        self.inner().grad(x)
    }
    fn eval_grad(&self, x: &DenseVector) -> Result<(f64, DenseVector)> {
        self.inner().eval_grad(x)
    }
    fn hessian_vec(&self, x: &DenseVector, v: &DenseVector) -> Result<DenseVector> {
        self.inner().hessian_vec(x, v)
    }
    fn has_hessian_vec(&self) -> bool {
        self.inner().has_hessian_vec()
    }
    fn constants(&self) -> Result<ObjectiveConstants> {
        self.inner().constants()
    }
    fn suboptimality(&self, x: &DenseVector, reference: &ReferenceSolution) -> Result<f64> {
        self.inner().suboptimality(x, reference)
    }
    fn closed_form_solution(&self) -> Option<Result<DenseVector>> {
        self.inner().closed_form_solution()
    }
    fn digest(&self) -> String {
        self.inner().digest()
    }
}

pub(crate) fn hex_digest(parts: &[&[u8]]) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part);
    }
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub(crate) fn f64_bytes(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

#[cfg(test)]
pub(crate) mod test_support {
    //! Property checks shared by the objective tests: strong convexity,
    //! smoothness and the gradient-domination bound, each evaluated
    //! straight from its defining inequality.

    use super::*;
    use crate::rng::RngStream;

    pub fn random_point(rng: &mut RngStream, center: &DenseVector, radius: f64) -> DenseVector {
        let dir = rng.gaussian_vector(center.len());
        center.add(&dir.scaled(radius))
    }

    pub fn assert_assumptions(obj: &dyn Objective, reference: &ReferenceSolution, seed: u64) {
        let c = obj.constants().unwrap();
        let mut rng = RngStream::new(seed);
        let radii = [1e-3, 1e-1, 1.0, 3.0];
        for i in 0..1000 {
            let r = radii[i % radii.len()];
            let x = random_point(&mut rng, &reference.x_star, r);
            let y = random_point(&mut rng, &reference.x_star, r);
            let (fx, gx) = obj.eval_grad(&x).unwrap();
            let (fy, gy) = obj.eval_grad(&y).unwrap();
            let diff = y.sub(&x);
            // strong convexity
            let lower = fx + gx.dot(&diff) + 0.5 * c.mu * diff.norm_sq();
            assert!(fy >= lower - 1e-9, "strong convexity violated: {fy} < {lower}");
            // smoothness
            let lhs = gy.sub(&gx).norm();
            assert!(lhs <= c.l * diff.norm() * (1.0 + 1e-9), "smoothness violated");
            // gradient domination
            let bound = 2.0 * c.l * (fx - reference.f_star);
            assert!(gx.norm_sq() <= bound + 1e-9, "gradient bound violated");
        }
    }
}
