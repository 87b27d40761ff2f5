//! Dense vectors, positive diagonal matrices and the norms they induce.
//!
//! Sums are plain left-to-right accumulations in `f64`. The checked
//! operations (`induced_norm_sq`, `inv_induced_norm_sq`, `hadamard`) return
//! errors on bad input; the arithmetic helpers on [`DenseVector`] are used in
//! inner loops and panic on a dimension mismatch instead.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::ops::Index;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseVector(Vec<f64>);

impl DenseVector {
    /// Wraps `entries`, rejecting NaN and infinities.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.iter().all(|v| v.is_finite()) {
            Ok(Self(entries))
        } else {
            Err(Error::NonFinite("vector entries"))
        }
    }

    /// Wraps `entries` without the finiteness check. Optimizer iterates go
    /// through this so that divergence can be detected and reported by the
    /// caller rather than failing at construction.
    pub fn from_vec_unchecked(entries: Vec<f64>) -> Self {
        Self(entries)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn filled(dim: usize, value: f64) -> Self {
        Self(vec![value; dim])
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[index] = 1.0;
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.len() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected,
                got: self.len(),
            })
        }
    }

    pub fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.len(), other.len(), "dot: dimension mismatch");
        let mut acc = 0.0;
        for (a, b) in self.0.iter().zip(&other.0) {
            acc += a * b;
        }
        acc
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "sub: dimension mismatch");
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "add: dimension mismatch");
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self(self.0.iter().map(|a| alpha * a).collect())
    }

    /// `self += alpha * x`
    pub fn axpy(&mut self, alpha: f64, x: &Self) {
        assert_eq!(self.len(), x.len(), "axpy: dimension mismatch");
        for (s, v) in self.0.iter_mut().zip(&x.0) {
            *s += alpha * v;
        }
    }

    /// `alpha * self + beta * other`, evaluated entrywise in that order.
    pub fn lincomb(&self, alpha: f64, other: &Self, beta: f64) -> Self {
        assert_eq!(self.len(), other.len(), "lincomb: dimension mismatch");
        Self(self.0.iter().zip(&other.0).map(|(a, b)| alpha * a + beta * b).collect())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self(self.0.iter().map(|&v| f(v)).collect())
    }
}

impl Index<usize> for DenseVector {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.0[index]
    }
}

impl From<DenseVector> for Vec<f64> {
    fn from(v: DenseVector) -> Self {
        v.0
    }
}

/// A diagonal positive-definite matrix stored by its diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagMatrix(DenseVector);

impl DiagMatrix {
    pub fn new(diag: DenseVector) -> Result<Self> {
        for (index, &value) in diag.iter().enumerate() {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidPreconditioner { index, value });
            }
        }
        Ok(Self(diag))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DenseVector::filled(dim, 1.0))
    }

    pub fn constant(dim: usize, value: f64) -> Result<Self> {
        Self::new(DenseVector::filled(dim, value))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn diag(&self) -> &DenseVector {
        &self.0
    }

    pub fn min_entry(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_entry(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.map(|v| 1.0 / v))
    }

    /// `D x`
    pub fn apply(&self, x: &DenseVector) -> DenseVector {
        assert_eq!(self.len(), x.len(), "apply: dimension mismatch");
        DenseVector(self.0.iter().zip(x.iter()).map(|(d, v)| d * v).collect())
    }

    /// `D⁻¹ x`, computed as an entrywise division.
    pub fn solve(&self, x: &DenseVector) -> DenseVector {
        assert_eq!(self.len(), x.len(), "solve: dimension mismatch");
        DenseVector(self.0.iter().zip(x.iter()).map(|(d, v)| v / d).collect())
    }

    /// `‖x‖²_D` without input validation.
    pub fn norm_sq(&self, x: &DenseVector) -> f64 {
        assert_eq!(self.len(), x.len(), "norm_sq: dimension mismatch");
        let mut acc = 0.0;
        for (d, v) in self.0.iter().zip(x.iter()) {
            acc += d * v * v;
        }
        acc
    }

    /// `‖x‖²_{D⁻¹}` without input validation.
    pub fn inv_norm_sq(&self, x: &DenseVector) -> f64 {
        assert_eq!(self.len(), x.len(), "inv_norm_sq: dimension mismatch");
        let mut acc = 0.0;
        for (d, v) in self.0.iter().zip(x.iter()) {
            acc += v * v / d;
        }
        acc
    }
}

fn check_pair(x: &DenseVector, a: &DiagMatrix) -> Result<()> {
    x.check_dim(a.len())?;
    if !x.is_finite() {
        return Err(Error::NonFinite("vector entries"));
    }
    for (index, &value) in a.diag().iter().enumerate() {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::InvalidPreconditioner { index, value });
        }
    }
    Ok(())
}

/// `‖x‖²_A = Σ A_ii x_i²`
pub fn induced_norm_sq(x: &DenseVector, a: &DiagMatrix) -> Result<f64> {
    check_pair(x, a)?;
    Ok(a.norm_sq(x))
}

/// `‖x‖²_{A⁻¹} = Σ x_i² / A_ii`
pub fn inv_induced_norm_sq(x: &DenseVector, a: &DiagMatrix) -> Result<f64> {
    check_pair(x, a)?;
    Ok(a.inv_norm_sq(x))
}

pub fn hadamard(x: &DenseVector, y: &DenseVector) -> Result<DenseVector> {
    y.check_dim(x.len())?;
    if !x.is_finite() || !y.is_finite() {
        return Err(Error::NonFinite("vector entries"));
    }
    Ok(DenseVector(x.iter().zip(y.iter()).map(|(a, b)| a * b).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(entries: &[f64]) -> DenseVector {
        DenseVector::new(entries.to_vec()).unwrap()
    }

    fn diag(entries: &[f64]) -> DiagMatrix {
        DiagMatrix::new(v(entries)).unwrap()
    }

    #[test]
    fn induced_norm_definition() {
        assert_eq!(induced_norm_sq(&v(&[1.0, 2.0]), &diag(&[3.0, 1.0])).unwrap(), 7.0);
    }

    #[test]
    fn identity_gives_euclidean_norm() {
        let x = v(&[0.5, -3.0, 2.25]);
        let id = DiagMatrix::identity(3);
        assert_eq!(induced_norm_sq(&x, &id).unwrap(), x.norm_sq());
        assert_eq!(inv_induced_norm_sq(&x, &id).unwrap(), x.norm_sq());
    }

    #[test]
    fn induced_norm_matches_entrywise_oracle() {
        let x: [f64; 3] = [0.3, -1.1, 2.0];
        let a = [2.0, 5.0, 0.5];
        let mut expected = 0.0;
        for i in 0..3 {
            expected += a[i] * x[i].powi(2);
        }
        let got = induced_norm_sq(&v(&x), &diag(&a)).unwrap();
        assert!((got - expected).abs() <= 1e-15 * expected);
        // 0.18 + 6.05 + 2.0 by hand
        assert!((got - 8.23).abs() < 1e-12);
    }

    #[test]
    fn inverse_norm_single_coordinate() {
        assert_eq!(inv_induced_norm_sq(&v(&[2.0, 0.0]), &diag(&[4.0, 1.0])).unwrap(), 1.0);
    }

    #[test]
    fn inverse_norm_rejects_nonpositive_entries() {
        let bad = DiagMatrix(DenseVector::from_vec_unchecked(vec![1.0, 0.0]));
        assert!(matches!(
            inv_induced_norm_sq(&v(&[1.0, 1.0]), &bad),
            Err(Error::InvalidPreconditioner { index: 1, .. })
        ));
        assert!(DiagMatrix::new(v(&[1.0, -2.0])).is_err());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let err = induced_norm_sq(&v(&[1.0]), &diag(&[1.0, 2.0])).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 2, got: 1 });
        assert!(hadamard(&v(&[1.0]), &v(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn non_finite_vectors_are_rejected() {
        assert!(DenseVector::new(vec![1.0, f64::NAN]).is_err());
        assert!(DenseVector::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn hadamard_examples() {
        assert_eq!(hadamard(&v(&[1.0, 2.0]), &v(&[3.0, 4.0])).unwrap(), v(&[3.0, 8.0]));
        assert_eq!(
            hadamard(&v(&[1.5, -2.0]), &DenseVector::zeros(2)).unwrap().as_slice(),
            &[0.0, 0.0]
        );
    }

    #[test]
    fn diag_inverse_roundtrip() {
        let d = diag(&[0.25, 3.0, 7.5]);
        let prod: Vec<f64> = d
            .diag()
            .iter()
            .zip(d.inverse().diag().iter())
            .map(|(a, b)| a * b)
            .collect();
        for p in prod {
            assert!((p - 1.0).abs() <= f64::EPSILON);
        }
    }

    fn vec_and_bounds() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64, f64)> {
        (1usize..12, 1e-3f64..10.0, 1.0f64..50.0).prop_flat_map(|(d, e, ratio)| {
            let gamma = e * ratio;
            (
                prop::collection::vec(-100.0f64..100.0, d),
                prop::collection::vec(e..=gamma, d),
                Just(e),
                Just(gamma),
            )
        })
    }

    proptest! {
        #[test]
        fn hadamard_square_is_nonnegative(g in prop::collection::vec(-1e6f64..1e6, 0..20)) {
            let g = DenseVector::new(g).unwrap();
            let sq = hadamard(&g, &g).unwrap();
            prop_assert!(sq.iter().all(|&v| v >= 0.0));
        }

        #[test]
        fn norms_are_sandwiched_by_bounds((x, a, e, gamma) in vec_and_bounds()) {
            let x = DenseVector::new(x).unwrap();
            let a = DiagMatrix::new(DenseVector::new(a).unwrap()).unwrap();
            let n2 = x.norm_sq();
            let ulps = 4.0 * f64::EPSILON;
            let ind = induced_norm_sq(&x, &a).unwrap();
            let inv = inv_induced_norm_sq(&x, &a).unwrap();
            prop_assert!(e * n2 <= ind * (1.0 + ulps));
            prop_assert!(ind <= gamma * n2 * (1.0 + ulps));
            prop_assert!(n2 / gamma <= inv * (1.0 + ulps));
            prop_assert!(inv <= n2 / e * (1.0 + ulps));
            prop_assert!(ind >= 0.0);
        }

        #[test]
        fn inverse_matrix_norm_equals_inverse_norm((x, a, _e, _g) in vec_and_bounds()) {
            let x = DenseVector::new(x).unwrap();
            let a = DiagMatrix::new(DenseVector::new(a).unwrap()).unwrap();
            let lhs = induced_norm_sq(&x, &a.inverse()).unwrap();
            let rhs = inv_induced_norm_sq(&x, &a).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(f64::MIN_POSITIVE));
        }
    }
}
