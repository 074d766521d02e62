//! Model parameters for the kinetic wave equation at dispersion exponent 1/2.

use crate::error::{KweError, Result};

/// Parameters of the model.
///
/// * `beta` — interaction exponent, strictly inside (-1, 1).  The collision
///   kernel weight behaves like `u^{-2*beta-1}` at the degenerate end of the
///   resonance parameterization, so the integral converges exactly on this
///   open interval.
/// * `p0` — positive integer Lebesgue index used by the working norm
///   (`L^{2*p0}` of the log-derivative).  It must satisfy
///   `p0 > max(1/(4(1-beta)), 1/(4(1+beta)))`, which is automatic for
///   `|beta| <= 3/4` and forces larger `p0` near the endpoints.
/// * `epsilon` — truncation parameter of the regularized scheme in [0, 1);
///   the resonance integral is restricted to `u in [epsilon, 1]`.
///
/// `gamma_scale = 2*beta + 3/2` is the exponent relating the occupation
/// spectrum `n` to the rescaled unknown `N = omega^{gamma_scale} * n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    beta: f64,
    p0: u32,
    epsilon: f64,
}

impl ModelParams {
    pub fn new(beta: f64, p0: u32, epsilon: f64) -> Result<Self> {
        if !beta.is_finite() || beta <= -1.0 || beta >= 1.0 {
            return Err(KweError::Domain(format!(
                "beta must lie strictly inside (-1, 1), got {beta}"
            )));
        }
        if p0 == 0 {
            return Err(KweError::Domain("p0 must be a positive integer".into()));
        }
        let p0_floor = (0.25 / (1.0 - beta)).max(0.25 / (1.0 + beta));
        if (p0 as f64) <= p0_floor {
            return Err(KweError::Domain(format!(
                "p0 = {p0} too small for beta = {beta}: need p0 > {p0_floor}"
            )));
        }
        if !epsilon.is_finite() || !(0.0..1.0).contains(&epsilon) {
            return Err(KweError::Domain(format!(
                "epsilon must lie in [0, 1), got {epsilon}"
            )));
        }
        Ok(Self { beta, p0, epsilon })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn p0(&self) -> u32 {
        self.p0
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Exponent of the rescaling `N = omega^{gamma_scale} * n`.
    pub fn gamma_scale(&self) -> f64 {
        2.0 * self.beta + 1.5
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_interior_beta() {
        let p = ModelParams::new(0.0, 1, 0.0).unwrap();
        assert_eq!(p.beta(), 0.0);
        assert_eq!(p.gamma_scale(), 1.5);
    }

    #[test]
    fn gamma_scale_quarter() {
        let p = ModelParams::new(0.25, 1, 0.0).unwrap();
        assert!((p.gamma_scale() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_endpoint_beta() {
        assert!(ModelParams::new(1.0, 1, 0.0).is_err());
        assert!(ModelParams::new(-1.0, 1, 0.0).is_err());
        assert!(ModelParams::new(f64::NAN, 1, 0.0).is_err());
    }

    #[test]
    fn p0_floor_tightens_near_endpoints() {
        // beta = 0.9: need p0 > 1/(4*0.1) = 2.5, so p0 = 3 is the smallest.
        assert!(ModelParams::new(0.9, 2, 0.0).is_err());
        assert!(ModelParams::new(0.9, 3, 0.0).is_ok());
        // Interior beta admits p0 = 1.
        assert!(ModelParams::new(-0.5, 1, 0.0).is_ok());
    }

    #[test]
    fn rejects_epsilon_outside_unit_interval() {
        assert!(ModelParams::new(0.0, 1, 1.0).is_err());
        assert!(ModelParams::new(0.0, 1, -0.1).is_err());
        assert!(ModelParams::new(0.0, 1, 0.999).is_ok());
    }
}
