use crate::error::{Error, Result};
use crate::numerics::DenseVector;

/// Geometric weights `w_k = q^{−(k+1)}` with `q = 1 − μF/(4Γ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragingWeights {
    /// `F = γ/(1−β₁)`
    pub f: f64,
    pub q: f64,
}

impl AveragingWeights {
    #[allow(non_snake_case)]
    pub fn new(mu: f64, F: f64, big_gamma: f64) -> Result<Self> {
        let ratio = mu * F / (4.0 * big_gamma);
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidWeights(ratio));
        }
        Ok(Self { f: F, q: 1.0 - ratio })
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.q.powf(-(k as f64 + 1.0))
    }
}

/// Weighted mean kept in normalized form, so the growing weights never
/// overflow: `A ← qA + x`, `Z ← qZ + 1`, mean `= A/Z`.
#[derive(Debug, Clone)]
pub struct RunningAverage {
    q: f64,
    acc: Option<DenseVector>,
    norm: f64,
}

impl RunningAverage {
    pub fn new(weights: AveragingWeights) -> Self {
        Self {
            q: weights.q,
            acc: None,
            norm: 0.0,
        }
    }

    pub fn push(&mut self, x: &DenseVector) {
        self.acc = Some(match self.acc.take() {
            None => x.clone(),
            Some(a) => a.lincomb(self.q, x, 1.0),
        });
        self.norm = self.q * self.norm + 1.0;
    }

    pub fn value(&self) -> Option<DenseVector> {
        self.acc.as_ref().map(|a| a.scaled(1.0 / self.norm))
    }
}

/// `(1/W_{K−1}) Σ_{k<K} w_k x_k`.
#[allow(non_snake_case)]
pub fn averaged_output(trace: &[DenseVector], mu: f64, F: f64, big_gamma: f64) -> Result<DenseVector> {
    let weights = AveragingWeights::new(mu, F, big_gamma)?;
    let mut avg = RunningAverage::new(weights);
    for x in trace {
        avg.push(x);
    }
    avg.value()
        .ok_or_else(|| Error::InvalidConfig("averaging needs at least one iterate".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(entries: &[f64]) -> DenseVector {
        DenseVector::new(entries.to_vec()).unwrap()
    }

    #[test]
    fn single_point() {
        let x = v(&[1.5, -2.0]);
        assert_eq!(averaged_output(std::slice::from_ref(&x), 1.0, 0.4, 1.0).unwrap(), x);
    }

    #[test]
    fn constant_trace() {
        let x = v(&[0.25, 3.0]);
        let avg = averaged_output(&vec![x.clone(); 7], 1.0, 0.4, 1.0).unwrap();
        for i in 0..2 {
            assert!((avg[i] - x[i]).abs() <= 1e-15 * x[i].abs());
        }
    }

    #[test]
    fn three_points_half_ratio() {
        // mu F / (4 Gamma) = 0.5
        let xs = [v(&[1.0]), v(&[2.0]), v(&[3.0])];
        let w = AveragingWeights::new(1.0, 2.0, 1.0).unwrap();
        assert_eq!([w.weight(0), w.weight(1), w.weight(2)], [2.0, 4.0, 8.0]);
        let avg = averaged_output(&xs, 1.0, 2.0, 1.0).unwrap();
        let expect = (2.0 * 1.0 + 4.0 * 2.0 + 8.0 * 3.0) / 14.0;
        assert!((avg[0] - expect).abs() < 1e-15);
    }

    #[test]
    fn long_traces_do_not_overflow() {
        let xs: Vec<DenseVector> = (0..5000).map(|k| v(&[k as f64])).collect();
        let avg = averaged_output(&xs, 1.0, 3.6, 1.0).unwrap();
        assert!(avg.is_finite());
        // q = 0.1: almost all weight on the last point
        assert!((avg[0] - 4999.0).abs() < 0.2);
    }

    #[test]
    fn invalid_ratio() {
        assert_eq!(AveragingWeights::new(1.0, 4.0, 1.0), Err(Error::InvalidWeights(1.0)));
        assert!(averaged_output(&[v(&[1.0])], 1.0, 0.0, 1.0).is_err());
    }
}
