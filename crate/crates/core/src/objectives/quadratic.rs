use super::{f64_bytes, hex_digest, Objective, ObjectiveConstants, ObjectiveKind, ReferenceSolution};
use crate::error::{Error, Result};
use crate::numerics::DenseVector;
use crate::rng::RngStream;
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub enum QuadMatrix {
    Diagonal(Vec<f64>),
    /// Row-major `dim × dim`.
    Dense {
        dim: usize,
        data: Vec<f64>,
    },
}

/// `f(x) = ½ xᵀAx − bᵀx` with `A` symmetric positive definite.
#[derive(Debug, Clone)]
pub struct Quadratic {
    matrix: QuadMatrix,
    shift: DenseVector,
}

impl Quadratic {
    pub fn diagonal(diag: Vec<f64>, shift: DenseVector) -> Result<Self> {
        shift.check_dim(diag.len())?;
        if let Some((i, v)) = diag.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidObjective(format!(
                "diagonal entry {i} is {v}; matrix must be positive definite"
            )));
        }
        Ok(Self {
            matrix: QuadMatrix::Diagonal(diag),
            shift,
        })
    }

    pub fn dense(dim: usize, data: Vec<f64>, shift: DenseVector) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        shift.check_dim(dim)?;
        for i in 0..dim {
            for j in 0..i {
                let (a, b) = (data[i * dim + j], data[j * dim + i]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::InvalidObjective(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        if DMatrix::from_row_slice(dim, dim, &data).cholesky().is_none() {
            return Err(Error::InvalidObjective("matrix is not positive definite".into()));
        }
        Ok(Self {
            matrix: QuadMatrix::Dense { dim, data },
            shift,
        })
    }

    /// Identity quadratic `½‖x‖²`.
    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: QuadMatrix::Diagonal(vec![1.0; dim]),
            shift: DenseVector::zeros(dim),
        }
    }

    /// Quadratic whose spectrum is geometrically spaced in `[1, kappa]`,
    /// with minimizer drawn from a standard Gaussian. With `rotate` the
    /// eigenbasis is a random orthogonal matrix; otherwise `A` is diagonal.
    pub fn synthetic(dim: usize, kappa: f64, rotate: bool, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidObjective("dimension must be positive".into()));
        }
        if !(kappa >= 1.0) || !kappa.is_finite() {
            return Err(Error::InvalidObjective(format!("kappa must be >= 1, got {kappa}")));
        }
        let eigen: Vec<f64> = (0..dim)
            .map(|i| {
                if dim == 1 {
                    1.0
                } else {
                    kappa.powf(i as f64 / (dim - 1) as f64)
                }
            })
            .collect();
        let mut rng = RngStream::new(seed);
        let x_star = rng.gaussian_vector(dim);
        if !rotate {
            let shift = DenseVector::from_vec_unchecked(eigen.iter().zip(x_star.iter()).map(|(a, x)| a * x).collect());
            return Self::diagonal(eigen, shift);
        }
        let g = DMatrix::from_fn(dim, dim, |_, _| rng.gaussian());
        let q = g.qr().q();
        let a = &q * DMatrix::from_diagonal(&DVector::from_vec(eigen)) * q.transpose();
        let a = (&a + a.transpose()) * 0.5;
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(a[(i, j)]);
            }
        }
        let shift = dense_matvec(dim, &data, &x_star);
        Self::dense(dim, data, shift)
    }

    pub fn matrix(&self) -> &QuadMatrix {
        &self.matrix
    }

    pub fn shift(&self) -> &DenseVector {
        &self.shift
    }

    pub fn matvec(&self, x: &DenseVector) -> DenseVector {
        match &self.matrix {
            QuadMatrix::Diagonal(d) => {
                DenseVector::from_vec_unchecked(d.iter().zip(x.iter()).map(|(a, v)| a * v).collect())
            }
            QuadMatrix::Dense { dim, data } => dense_matvec(*dim, data, x),
        }
    }

    /// Row `i` of `A`.
    pub fn row(&self, i: usize) -> Vec<f64> {
        match &self.matrix {
            QuadMatrix::Diagonal(d) => {
                let mut r = vec![0.0; d.len()];
                r[i] = d[i];
                r
            }
            QuadMatrix::Dense { dim, data } => data[i * dim..(i + 1) * dim].to_vec(),
        }
    }

    /// `max_i Σ_j |A_ij|`
    pub fn max_abs_row_sum(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn to_nalgebra(&self) -> DMatrix<f64> {
        match &self.matrix {
            QuadMatrix::Diagonal(d) => DMatrix::from_diagonal(&DVector::from_vec(d.clone())),
            QuadMatrix::Dense { dim, data } => DMatrix::from_row_slice(*dim, *dim, data),
        }
    }
}

fn dense_matvec(dim: usize, data: &[f64], x: &DenseVector) -> DenseVector {
    let mut out = Vec::with_capacity(dim);
    for i in 0..dim {
        let row = &data[i * dim..(i + 1) * dim];
        let mut acc = 0.0;
        for (a, v) in row.iter().zip(x.iter()) {
            acc += a * v;
        }
        out.push(acc);
    }
    DenseVector::from_vec_unchecked(out)
}

impl Objective for Quadratic {
    fn kind(&self) -> ObjectiveKind {
        ObjectiveKind::Quadratic
    }

    fn dim(&self) -> usize {
        self.shift.len()
    }

    fn eval(&self, x: &DenseVector) -> Result<f64> {
        x.check_dim(self.dim())?;
        let ax = self.matvec(x);
        Ok(0.5 * x.dot(&ax) - self.shift.dot(x))
    }

    fn grad(&self, x: &DenseVector) -> Result<DenseVector> {
        x.check_dim(self.dim())?;
        Ok(self.matvec(x).sub(&self.shift))
    }

    fn eval_grad(&self, x: &DenseVector) -> Result<(f64, DenseVector)> {
        x.check_dim(self.dim())?;
        let ax = self.matvec(x);
        let f = 0.5 * x.dot(&ax) - self.shift.dot(x);
        Ok((f, ax.sub(&self.shift)))
    }

    fn hessian_vec(&self, _x: &DenseVector, v: &DenseVector) -> Result<DenseVector> {
        v.check_dim(self.dim())?;
        Ok(self.matvec(v))
    }

    fn has_hessian_vec(&self) -> bool {
        true
    }

    fn constants(&self) -> Result<ObjectiveConstants> {
        let (l, mu) = match &self.matrix {
            QuadMatrix::Diagonal(d) => (
                d.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                d.iter().copied().fold(f64::INFINITY, f64::min),
            ),
            QuadMatrix::Dense { .. } => {
                let eig = self.to_nalgebra().symmetric_eigenvalues();
                (eig.max(), eig.min())
            }
        };
        ObjectiveConstants::new(l, mu)
    }

    /// `½ (x − x*)ᵀ A (x − x*)`, exact for the true minimizer.
    fn suboptimality(&self, x: &DenseVector, reference: &ReferenceSolution) -> Result<f64> {
        x.check_dim(self.dim())?;
        let e = x.sub(&reference.x_star);
        Ok(0.5 * e.dot(&self.matvec(&e)))
    }

    fn closed_form_solution(&self) -> Option<Result<DenseVector>> {
        let solution = match &self.matrix {
            QuadMatrix::Diagonal(d) => Ok(DenseVector::from_vec_unchecked(
                self.shift.iter().zip(d).map(|(b, a)| b / a).collect(),
            )),
            QuadMatrix::Dense { .. } => {
                let a = self.to_nalgebra();
                match a.clone().cholesky() {
                    None => Err(Error::InvalidObjective("matrix is not positive definite".into())),
                    Some(chol) => {
                        let b = DVector::from_column_slice(self.shift.as_slice());
                        let mut x = chol.solve(&b);
                        // one step of iterative refinement
                        let r = &b - &a * &x;
                        x += chol.solve(&r);
                        Ok(DenseVector::from_vec_unchecked(x.iter().copied().collect()))
                    }
                }
            }
        };
        Some(solution)
    }

    fn digest(&self) -> String {
        let (tag, dim, data): (&[u8], usize, &[f64]) = match &self.matrix {
            QuadMatrix::Diagonal(d) => (b"quadratic-diagonal", d.len(), d),
            QuadMatrix::Dense { dim, data } => (b"quadratic-dense", *dim, data),
        };
        hex_digest(&[
            tag,
            &(dim as u64).to_le_bytes(),
            &f64_bytes(data),
            &f64_bytes(self.shift.as_slice()),
        ])
    }
}
