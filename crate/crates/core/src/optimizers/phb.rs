use crate::error::{Error, Result};
use crate::numerics::DenseVector;
use crate::objectives::Objective;
use crate::preconditioners::{information_with_gradient, PrecondRule, PreconditionerState};
use crate::rng::RngStream;

/// Iterate `x_k`, momentum `V_{k−1}`, and the cached value and gradient at `x_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhbState {
    pub x: DenseVector,
    pub v: DenseVector,
    pub k: usize,
    pub f: f64,
    pub grad: DenseVector,
}

impl PhbState {
    pub fn new(obj: &dyn Objective, x0: DenseVector) -> Result<Self> {
        let (f, grad) = obj.eval_grad(&x0)?;
        if !f.is_finite() || !grad.is_finite() {
            return Err(Error::Divergence { iteration: 0 });
        }
        Ok(Self {
            v: DenseVector::zeros(x0.len()),
            x: x0,
            k: 0,
            f,
            grad,
        })
    }
}

/// `V_k = β₁V_{k−1} + D̂_k⁻¹∇f(x_k)`, `x_{k+1} = x_k − γV_k`, then the
/// preconditioner moves to `D̂_{k+1}` using information at `x_{k+1}`.
pub fn phb_step(
    state: &PhbState,
    obj: &dyn Objective,
    precond: &PreconditionerState,
    rule: &PrecondRule,
    gamma: f64,
    beta1: f64,
    rng: &mut RngStream,
) -> Result<(PhbState, PreconditionerState)> {
    let v = state.v.lincomb(beta1, &precond.dhat().solve(&state.grad), 1.0);
    let x = state.x.lincomb(1.0, &v, -gamma);
    let iteration = state.k + 1;
    if !x.is_finite() {
        return Err(Error::Divergence { iteration });
    }
    let (f, grad) = obj.eval_grad(&x)?;
    if !f.is_finite() || !grad.is_finite() {
        return Err(Error::Divergence { iteration });
    }
    let h = information_with_gradient(rule, obj, &x, &grad, rng)?;
    let next = precond.update(rule, &h).map_err(|e| match e {
        Error::NonFinite(_) => Error::Divergence { iteration },
        other => other,
    })?;
    Ok((
        PhbState {
            x,
            v,
            k: iteration,
            f,
            grad,
        },
        next,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::DiagMatrix;
    use crate::objectives::Quadratic;
    use crate::optimizers::prime_preconditioner;
    use crate::preconditioners::{Beta2Schedule, InitialScaling};

    fn v(entries: &[f64]) -> DenseVector {
        DenseVector::new(entries.to_vec()).unwrap()
    }

    #[test]
    fn two_hand_iterations() {
        let obj = Quadratic::identity(1);
        let rule = PrecondRule::identity();
        let mut rng = RngStream::new(0);
        let s0 = PhbState::new(&obj, v(&[1.0])).unwrap();
        let p = PreconditionerState::from_running(v(&[1.0]), 1e-8).unwrap();
        let (s1, p) = phb_step(&s0, &obj, &p, &rule, 0.1, 0.5, &mut rng).unwrap();
        assert_eq!(s1.v[0], 1.0);
        assert_eq!(s1.x[0], 0.9);
        let (s2, _) = phb_step(&s1, &obj, &p, &rule, 0.1, 0.5, &mut rng).unwrap();
        assert_eq!(s2.v[0], 1.4);
        assert!((s2.x[0] - 0.76).abs() < 1e-15);
    }

    #[test]
    fn zero_momentum_identity_is_gradient_descent() {
        let obj = Quadratic::synthetic(10, 50.0, true, 4).unwrap();
        let rule = PrecondRule::identity();
        let mut rng = RngStream::new(0);
        let x0 = RngStream::new(1).gaussian_vector(10);
        let mut s = PhbState::new(&obj, x0.clone()).unwrap();
        let mut p = PreconditionerState::from_running(DenseVector::filled(10, 1.0), 1e-8).unwrap();
        let mut gd = x0;
        for _ in 0..100 {
            let (ns, np) = phb_step(&s, &obj, &p, &rule, 0.01, 0.0, &mut rng).unwrap();
            gd = gd.lincomb(1.0, &obj.grad(&gd).unwrap(), -0.01);
            assert_eq!(ns.x, gd);
            s = ns;
            p = np;
        }
    }

    /// Straight-line transcription with plain arrays.
    fn transcription(
        a: &[[f64; 3]; 3],
        b: &[f64; 3],
        x0: [f64; 3],
        gamma: f64,
        beta1: f64,
        beta2: f64,
        floor: f64,
        steps: usize,
    ) -> Vec<[f64; 3]> {
        let grad = |x: &[f64; 3]| {
            let mut g = [0.0; 3];
            for i in 0..3 {
                g[i] = a[i][0] * x[0] + a[i][1] * x[1] + a[i][2] * x[2] - b[i];
            }
            g
        };
        let mut x = x0;
        let mut mom = [0.0; 3];
        let g0 = grad(&x);
        // D_{-1} = |g0|, then D_0 from the same information
        let mut d = [0.0; 3];
        for i in 0..3 {
            let prev = g0[i].abs();
            d[i] = (beta2 * prev * prev + (1.0 - beta2) * g0[i] * g0[i]).sqrt();
        }
        let mut out = vec![x];
        for _ in 0..steps {
            let g = grad(&x);
            for i in 0..3 {
                mom[i] = beta1 * mom[i] + g[i] / d[i].max(floor);
                x[i] -= gamma * mom[i];
            }
            let g_new = grad(&x);
            for i in 0..3 {
                d[i] = (beta2 * d[i] * d[i] + (1.0 - beta2) * g_new[i] * g_new[i]).sqrt();
            }
            out.push(x);
        }
        out
    }

    #[test]
    fn matches_straight_line_transcription() {
        let a = [[3.0, 0.5, 0.2], [0.5, 2.0, -0.3], [0.2, -0.3, 1.0]];
        let b = [1.0, -2.0, 0.5];
        let flat: Vec<f64> = a.iter().flatten().copied().collect();
        let obj = Quadratic::dense(3, flat, v(&b)).unwrap();
        let (gamma, beta1, beta2, floor) = (0.02, 0.9, 0.99, 1e-3);
        let x0 = [2.0, -1.0, 3.0];
        let expect = transcription(&a, &b, x0, gamma, beta1, beta2, floor, 50);

        let rule = PrecondRule::adam(Beta2Schedule::Fixed(beta2));
        let mut rng = RngStream::new(0);
        let mut s = PhbState::new(&obj, v(&x0)).unwrap();
        let (_, mut p) = prime_preconditioner(
            &rule,
            InitialScaling::FirstInformation,
            floor,
            &obj,
            &s.x,
            &s.grad,
            &mut rng,
        )
        .unwrap();
        for (k, want) in expect.iter().enumerate().skip(1) {
            let (ns, np) = phb_step(&s, &obj, &p, &rule, gamma, beta1, &mut rng).unwrap();
            s = ns;
            p = np;
            for i in 0..3 {
                assert!((s.x[i] - want[i]).abs() <= 1e-12 * want[i].abs().max(1.0), "step {k}");
            }
        }
    }

    #[test]
    fn divergence_names_iteration() {
        let obj = Quadratic::diagonal(vec![1e300], v(&[0.0])).unwrap();
        let rule = PrecondRule::identity();
        let s = PhbState::new(&obj, v(&[1.0])).unwrap();
        let p = PreconditionerState::from_running(v(&[1.0]), 1e-8).unwrap();
        let err = phb_step(&s, &obj, &p, &rule, 10.0, 0.0, &mut RngStream::new(0)).unwrap_err();
        assert_eq!(err, Error::Divergence { iteration: 1 });
    }

    #[test]
    fn preconditioner_divides_gradient() {
        let obj = Quadratic::identity(2);
        let rule = PrecondRule::identity();
        let s = PhbState::new(&obj, v(&[2.0, 2.0])).unwrap();
        let p = PreconditionerState::from_running(v(&[1.0, 4.0]), 1e-8).unwrap();
        assert_eq!(p.dhat(), &DiagMatrix::new(v(&[1.0, 4.0])).unwrap());
        let (s1, _) = phb_step(&s, &obj, &p, &rule, 1.0, 0.0, &mut RngStream::new(0)).unwrap();
        assert_eq!(s1.x, v(&[0.0, 1.5]));
    }
}
