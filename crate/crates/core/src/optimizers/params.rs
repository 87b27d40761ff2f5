use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Step size `γ`, extrapolation weight `ξ` and mixing weight `θ` of the
/// preconditioned Nesterov method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PnParams {
    pub gamma: f64,
    pub xi: f64,
    pub theta: f64,
}

impl PnParams {
    pub fn new(gamma: f64, xi: f64, theta: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidConfig(format!("gamma must be > 0, got {gamma}")));
        }
        if !(xi >= 0.0) || !xi.is_finite() {
            return Err(Error::InvalidConfig(format!("xi must be >= 0, got {xi}")));
        }
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::InvalidConfig(format!("theta must lie in [0, 1], got {theta}")));
        }
        Ok(Self { gamma, xi, theta })
    }
}

/// `γ = (1−β₁)² e / (12L)`.
pub fn phb_theory_gamma(l: f64, e: f64, beta1: f64) -> f64 {
    (1.0 - beta1).powi(2) * e / (12.0 * l)
}

/// `γ = e/L`, `ξ = √(LΓ/(μe))`, `θ = √(LΓ)/(√(μe) + √(LΓ))`.
pub fn pn_theory_params(l: f64, mu: f64, e: f64, big_gamma: f64) -> Result<PnParams> {
    if !(mu > 0.0) || !(l >= mu) || !l.is_finite() {
        return Err(Error::InvalidConstants(format!(
            "need 0 < mu <= L, got L = {l}, mu = {mu}"
        )));
    }
    if !(e > 0.0) || !(big_gamma >= e) || !big_gamma.is_finite() {
        return Err(Error::InvalidConstants(format!(
            "need 0 < e <= Gamma, got e = {e}, Gamma = {big_gamma}"
        )));
    }
    let upper = (l * big_gamma).sqrt();
    let lower = (mu * e).sqrt();
    PnParams::new(e / l, (l * big_gamma / (mu * e)).sqrt(), upper / (lower + upper))
}

/// Weights for a given step size: the smallest `ξ ≥ 1` with `ξ²γμ/Γ ≥ 1`,
/// and `θ = ξ/(1+ξ)`.
pub fn pn_params_for_gamma(gamma: f64, mu: f64, big_gamma: f64) -> Result<PnParams> {
    if !(mu > 0.0) || !(big_gamma > 0.0) {
        return Err(Error::InvalidConstants(format!(
            "need mu > 0 and Gamma > 0, got mu = {mu}, Gamma = {big_gamma}"
        )));
    }
    let xi = (big_gamma / (gamma * mu)).sqrt().max(1.0);
    PnParams::new(gamma, xi, xi / (1.0 + xi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phb_gamma_examples() {
        assert_eq!(phb_theory_gamma(1.0, 1.0, 0.0), 1.0 / 12.0);
        assert!((phb_theory_gamma(1.0, 1.0, 0.9) - 0.01 / 12.0).abs() < 1e-18);
        for beta1 in [0.0, 0.3, 0.9, 0.99] {
            let (l, e) = (7.0, 0.3);
            let f = phb_theory_gamma(l, e, beta1) / (1.0 - beta1);
            assert!(f <= e / (4.0 * l));
        }
    }

    #[test]
    fn pn_perfectly_conditioned() {
        let p = pn_theory_params(3.0, 3.0, 2.0, 2.0).unwrap();
        assert_eq!(p.gamma, 2.0 / 3.0);
        assert_eq!(p.xi, 1.0);
        assert_eq!(p.theta, 0.5);
    }

    #[test]
    fn pn_ill_conditioned() {
        let p = pn_theory_params(1.0, 0.01, 1.0, 1.0).unwrap();
        assert!((p.xi - 10.0).abs() < 1e-12);
        assert!((p.theta - 10.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn pn_side_conditions() {
        for (l, mu, e, g) in [(10.0, 1.0, 0.5, 2.0), (1e4, 1.0, 1.0, 1.0), (2.0, 0.3, 0.01, 7.0)] {
            let p = pn_theory_params(l, mu, e, g).unwrap();
            assert!(p.xi >= 1.0);
            assert!((p.xi * p.xi * p.gamma * mu / g - 1.0).abs() < 1e-12);
            assert!((p.theta - p.xi / (1.0 + p.xi)).abs() < 1e-12);
            assert!(p.gamma <= e / l);
        }
    }

    #[test]
    fn pn_rejects_bad_constants() {
        assert!(matches!(
            pn_theory_params(1.0, 2.0, 1.0, 1.0),
            Err(Error::InvalidConstants(_))
        ));
        assert!(matches!(
            pn_theory_params(2.0, 1.0, 2.0, 1.0),
            Err(Error::InvalidConstants(_))
        ));
    }

    #[test]
    fn pn_for_gamma() {
        let p = pn_params_for_gamma(0.01, 1.0, 1.0).unwrap();
        assert!((p.xi - 10.0).abs() < 1e-12);
        let p = pn_params_for_gamma(2.0, 1.0, 1.0).unwrap();
        assert_eq!(p.xi, 1.0);
        assert_eq!(p.theta, 0.5);
    }
}
