use super::{f64_bytes, hex_digest, Objective, ObjectiveConstants, ObjectiveKind};
use crate::error::{Error, Result};
use crate::numerics::DenseVector;
use crate::rng::RngStream;

const POWER_ITER_TOL: f64 = 1e-8;
const POWER_ITER_MAX: usize = 100_000;

/// Mean logistic loss with an L2 penalty:
/// `f(w) = (1/n) Σ log(1 + exp(−yᵢ aᵢᵀw)) + (λ/2)‖w‖²`.
#[derive(Debug, Clone)]
pub struct LogisticL2 {
    n: usize,
    d: usize,
    /// Row-major `n × d`.
    features: Vec<f64>,
    labels: Vec<f64>,
    lambda: f64,
}

/// `log(1 + exp(z))` without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogisticL2 {
    pub fn new(n: usize, d: usize, features: Vec<f64>, labels: Vec<f64>, lambda: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if features.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                got: features.len(),
            });
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: labels.len(),
            });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("features"));
        }
        if let Some(y) = labels.iter().find(|y| **y != 1.0 && **y != -1.0) {
            return Err(Error::InvalidObjective(format!("label {y} is not +1 or -1")));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidObjective(format!(
                "regularization must be >= 0, got {lambda}"
            )));
        }
        Ok(Self {
            n,
            d,
            features,
            labels,
            lambda,
        })
    }

    /// Gaussian features with labels drawn from a noisy linear teacher.
    pub fn synthetic(n: usize, d: usize, lambda: f64, seed: u64) -> Result<Self> {
        let mut rng = RngStream::new(seed);
        let teacher = rng.gaussian_vector(d);
        let mut features = Vec::with_capacity(n * d);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let row = rng.gaussian_vector(d);
            let margin = row.dot(&teacher) + rng.gaussian();
            labels.push(if margin >= 0.0 { 1.0 } else { -1.0 });
            features.extend(row.into_vec());
        }
        Self::new(n, d, features, labels, lambda)
    }

    pub fn n_samples(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    fn row_dot(&self, i: usize, w: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (a, b) in self.row(i).iter().zip(w) {
            acc += a * b;
        }
        acc
    }

    /// Mean logistic loss without the penalty term.
    pub fn data_loss(&self, w: &DenseVector) -> Result<f64> {
        w.check_dim(self.d)?;
        let mut total = 0.0;
        for i in 0..self.n {
            total += softplus(-self.labels[i] * self.row_dot(i, w.as_slice()));
        }
        Ok(total / self.n as f64)
    }

    /// `v ↦ XᵀXv / (4n)`
    fn gram_apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.d];
        for i in 0..self.n {
            let s = self.row_dot(i, v);
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += s * a;
            }
        }
        let scale = 1.0 / (4.0 * self.n as f64);
        out.iter_mut().for_each(|o| *o *= scale);
        out
    }

    /// Largest eigenvalue of `XᵀX / (4n)` by power iteration.
    fn gram_max_eigenvalue(&self) -> f64 {
        if self.d == 0 {
            return 0.0;
        }
        // deterministic start with distinct entries, so it is not orthogonal
        // to the leading eigenvector in symmetric fixtures
        let mut v: Vec<f64> = (0..self.d).map(|i| 1.0 + 1.0 / (i as f64 + 2.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let mut estimate = 0.0;
        for _ in 0..POWER_ITER_MAX {
            let mv = self.gram_apply(&v);
            let rayleigh: f64 = mv.iter().zip(&v).map(|(a, b)| a * b).sum();
            let norm = mv.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            v = mv.into_iter().map(|x| x / norm).collect();
            if (rayleigh - estimate).abs() <= POWER_ITER_TOL * rayleigh.abs() {
                // norm of M v is the sharper (never smaller) estimate
                return norm.max(rayleigh);
            }
            estimate = rayleigh;
        }
        estimate
    }
}

impl Objective for LogisticL2 {
    fn kind(&self) -> ObjectiveKind {
        ObjectiveKind::LogisticL2
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn eval(&self, w: &DenseVector) -> Result<f64> {
        Ok(self.data_loss(w)? + 0.5 * self.lambda * w.norm_sq())
    }

    fn grad(&self, w: &DenseVector) -> Result<DenseVector> {
        Ok(self.eval_grad(w)?.1)
    }

    fn eval_grad(&self, w: &DenseVector) -> Result<(f64, DenseVector)> {
        w.check_dim(self.d)?;
        let mut loss = 0.0;
        let mut g = vec![0.0; self.d];
        for i in 0..self.n {
            let y = self.labels[i];
            let z = -y * self.row_dot(i, w.as_slice());
            loss += softplus(z);
            let coeff = -y * sigmoid(z);
            for (gj, a) in g.iter_mut().zip(self.row(i)) {
                *gj += coeff * a;
            }
        }
        let inv_n = 1.0 / self.n as f64;
        for (gj, wj) in g.iter_mut().zip(w.iter()) {
            *gj = *gj * inv_n + self.lambda * wj;
        }
        let f = loss * inv_n + 0.5 * self.lambda * w.norm_sq();
        Ok((f, DenseVector::from_vec_unchecked(g)))
    }

    fn hessian_vec(&self, w: &DenseVector, v: &DenseVector) -> Result<DenseVector> {
        w.check_dim(self.d)?;
        v.check_dim(self.d)?;
        let mut out = vec![0.0; self.d];
        for i in 0..self.n {
            let s = sigmoid(self.row_dot(i, w.as_slice()));
            let coeff = s * (1.0 - s) * self.row_dot(i, v.as_slice());
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += coeff * a;
            }
        }
        let inv_n = 1.0 / self.n as f64;
        for (o, vj) in out.iter_mut().zip(v.iter()) {
            *o = *o * inv_n + self.lambda * vj;
        }
        Ok(DenseVector::from_vec_unchecked(out))
    }

    fn has_hessian_vec(&self) -> bool {
        true
    }

    fn constants(&self) -> Result<ObjectiveConstants> {
        if self.lambda <= 0.0 {
            return Err(Error::NoStrongConvexity(
                "logistic loss needs a positive L2 weight".into(),
            ));
        }
        ObjectiveConstants::new(self.gram_max_eigenvalue() + self.lambda, self.lambda)
    }

    fn digest(&self) -> String {
        hex_digest(&[
            b"logistic-l2",
            &(self.n as u64).to_le_bytes(),
            &(self.d as u64).to_le_bytes(),
            &f64_bytes(&self.features),
            &f64_bytes(&self.labels),
            &self.lambda.to_le_bytes(),
        ])
    }
}
