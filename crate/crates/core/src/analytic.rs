//! Closed-form spectra used as initial data, stationary references, and
//! concentration test profiles.

use crate::error::{KweError, Result};
use crate::numerics::gauss_legendre;

/// Exponent of the stationary power law carrying a constant mass flux.
pub fn kz_mass_exponent(beta: f64) -> f64 {
    -(4.0 * beta + 5.0) / 3.0
}

/// Exponent of the stationary power law carrying a constant energy flux.
pub fn kz_energy_exponent(beta: f64) -> f64 {
    -(4.0 * beta + 6.0) / 3.0
}

/// A spectrum with a closed-form profile.  `value` returns the raw profile;
/// the caller decides whether to interpret it as an occupation spectrum or a
/// rescaled one when wiring it into samplers and fields.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticSpectrum {
    /// Thermodynamic equilibrium `1 / (c1 * omega + c2)`.
    RayleighJeans { c1: f64, c2: f64 },
    /// Stationary power law with constant mass flux (exponent depends on the
    /// kernel parameter `beta`).
    KolmogorovZakharovMass,
    /// Stationary power law with constant energy flux.
    KolmogorovZakharovEnergy,
    /// Plain power law `omega^exponent`.
    PowerLaw { exponent: f64 },
    /// Gaussian bump in `ln(omega)`:
    /// `amplitude * exp(-ln^2(omega/center) / (2 width^2))`.
    GaussianBumpInLogOmega {
        center: f64,
        width: f64,
        amplitude: f64,
    },
    /// Three-bump profile with supports of width `eps^2`, `eps`, `eps^2`
    /// centered at 1/3, 2/3, 1, normalized to keep the `L^p` norm
    /// independent of `eps`.  Used to probe concentration of the collision
    /// operator near resonance-aligned frequency triples.
    ConcentrationData { eps: f64, p: f64 },
}

impl AnalyticSpectrum {
    /// Check parameter ranges.  Returns the spectrum back for chaining.
    pub fn validate(self) -> Result<Self> {
        match &self {
            AnalyticSpectrum::RayleighJeans { c1, c2 } => {
                if !(c1.is_finite() && c2.is_finite()) || *c1 < 0.0 || *c2 < 0.0 || c1 + c2 <= 0.0
                {
                    return Err(KweError::Domain(format!(
                        "equilibrium spectrum needs c1 >= 0, c2 >= 0, c1 + c2 > 0; got c1={c1}, c2={c2}"
                    )));
                }
            }
            AnalyticSpectrum::KolmogorovZakharovMass
            | AnalyticSpectrum::KolmogorovZakharovEnergy => {}
            AnalyticSpectrum::PowerLaw { exponent } => {
                if !exponent.is_finite() {
                    return Err(KweError::Domain(format!(
                        "power law exponent must be finite, got {exponent}"
                    )));
                }
            }
            AnalyticSpectrum::GaussianBumpInLogOmega {
                center,
                width,
                amplitude,
            } => {
                if !(center.is_finite() && width.is_finite() && amplitude.is_finite())
                    || *center <= 0.0
                    || *width <= 0.0
                    || *amplitude < 0.0
                {
                    return Err(KweError::Domain(format!(
                        "bump needs center > 0, width > 0, amplitude >= 0; got \
                         center={center}, width={width}, amplitude={amplitude}"
                    )));
                }
            }
            AnalyticSpectrum::ConcentrationData { eps, p } => {
                // The bound on eps keeps the three supports pairwise disjoint
                // and strictly inside (0, 2).
                if !(eps.is_finite() && p.is_finite()) || *eps <= 0.0 || *eps > 0.25 || *p < 1.0 {
                    return Err(KweError::Domain(format!(
                        "concentration data needs eps in (0, 1/4], p >= 1; got eps={eps}, p={p}"
                    )));
                }
            }
        }
        Ok(self)
    }

    /// Profile value at `omega > 0`.  `beta` only affects the constant-flux
    /// power laws.
    pub fn value(&self, omega: f64, beta: f64) -> f64 {
        match *self {
            AnalyticSpectrum::RayleighJeans { c1, c2 } => 1.0 / (c1 * omega + c2),
            AnalyticSpectrum::KolmogorovZakharovMass => omega.powf(kz_mass_exponent(beta)),
            AnalyticSpectrum::KolmogorovZakharovEnergy => omega.powf(kz_energy_exponent(beta)),
            AnalyticSpectrum::PowerLaw { exponent } => omega.powf(exponent),
            AnalyticSpectrum::GaussianBumpInLogOmega {
                center,
                width,
                amplitude,
            } => {
                let x = (omega / center).ln() / width;
                amplitude * (-0.5 * x * x).exp()
            }
            AnalyticSpectrum::ConcentrationData { eps, p } => {
                let narrow = eps.powf(-2.0 / p);
                let wide = eps.powf(-1.0 / p);
                narrow * plateau_bump((omega - 1.0 / 3.0) / (eps * eps))
                    + wide * plateau_bump((omega - 2.0 / 3.0) / eps)
                    + narrow * plateau_bump((omega - 1.0) / (eps * eps))
            }
        }
    }
}

/// C^2 plateau bump: identically 1 on |x| <= 1/2, identically 0 for
/// |x| >= 1, quintic smoothstep in between.
pub fn plateau_bump(x: f64) -> f64 {
    let a = x.abs();
    if a <= 0.5 {
        1.0
    } else if a >= 1.0 {
        0.0
    } else {
        let t = 2.0 * (1.0 - a);
        ((6.0 * t - 15.0) * t + 10.0) * t * t * t
    }
}

/// `L^p(d omega)` norm of the three-bump concentration profile.  The bump
/// amplitudes are chosen so this is independent of `eps`:
/// each bump contributes `I_p = int bump(x)^p dx`, so the norm is
/// `(3 I_p)^(1/p)`.
pub fn concentration_norm(p: f64) -> f64 {
    // I_p = 2 * (1/2 + int_{1/2}^{1} bump(x)^p dx), by symmetry.
    let (nodes, weights) = gauss_legendre(24);
    let mut shoulder = 0.0;
    for (&x, &w) in nodes.iter().zip(&weights) {
        // Map [-1, 1] -> [1/2, 1].
        let t = 0.75 + 0.25 * x;
        shoulder += 0.25 * w * plateau_bump(t).powf(p);
    }
    let i_p = 2.0 * (0.5 + shoulder);
    (3.0 * i_p).powf(1.0 / p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tol;

    #[test]
    fn plateau_bump_is_a_partition_of_sizes() {
        assert_eq!(plateau_bump(0.0), 1.0);
        assert_eq!(plateau_bump(0.5), 1.0);
        assert_eq!(plateau_bump(-0.3), 1.0);
        assert_eq!(plateau_bump(1.0), 0.0);
        assert_eq!(plateau_bump(-2.0), 0.0);
        // Continuity at the knots.
        assert!((plateau_bump(0.5 + 1e-9) - 1.0).abs() < 1e-7);
        assert!(plateau_bump(1.0 - 1e-9).abs() < 1e-7);
    }

    #[test]
    fn plateau_bump_shoulder_midpoint() {
        // At |x| = 3/4 the smoothstep argument is 1/2: s(1/2) = 1/2.
        assert!((plateau_bump(0.75) - 0.5).abs() < tol::IDENTITY);
    }

    #[test]
    fn kz_exponents_at_reference_betas() {
        assert!((kz_mass_exponent(0.0) + 5.0 / 3.0).abs() < tol::IDENTITY);
        assert!((kz_energy_exponent(0.0) + 2.0).abs() < tol::IDENTITY);
        assert!((kz_mass_exponent(0.25) + 2.0).abs() < tol::IDENTITY);
    }

    #[test]
    fn equilibrium_value() {
        let s = AnalyticSpectrum::RayleighJeans { c1: 2.0, c2: 3.0 }
            .validate()
            .unwrap();
        assert!((s.value(0.5, 0.0) - 0.25).abs() < tol::IDENTITY);
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        assert!(AnalyticSpectrum::RayleighJeans { c1: 0.0, c2: 0.0 }
            .validate()
            .is_err());
        assert!(AnalyticSpectrum::RayleighJeans { c1: -1.0, c2: 1.0 }
            .validate()
            .is_err());
        assert!(AnalyticSpectrum::PowerLaw {
            exponent: f64::INFINITY
        }
        .validate()
        .is_err());
        assert!(AnalyticSpectrum::GaussianBumpInLogOmega {
            center: 0.0,
            width: 1.0,
            amplitude: 1.0
        }
        .validate()
        .is_err());
        assert!(AnalyticSpectrum::ConcentrationData { eps: 0.3, p: 2.0 }
            .validate()
            .is_err());
        assert!(AnalyticSpectrum::ConcentrationData { eps: 0.1, p: 0.5 }
            .validate()
            .is_err());
    }

    #[test]
    fn concentration_supports_are_disjoint_and_norm_is_eps_free() {
        for &eps in &[0.1f64, 0.05, 0.025] {
            let s = AnalyticSpectrum::ConcentrationData { eps, p: 2.0 }
                .validate()
                .unwrap();
            // Between supports the profile vanishes.
            assert_eq!(s.value(0.5, 0.0), 0.0);
            assert_eq!(s.value(0.85, 0.0), 0.0);
            // On a plateau it equals the nominal amplitude.
            let narrow = eps.powf(-1.0);
            assert!((s.value(1.0 / 3.0, 0.0) - narrow).abs() < 1e-12 * narrow);
        }
        // Norm formula is independent of eps by construction; sanity-check
        // its p = 2 value against a crude Riemann sum of one profile.
        let p = 2.0;
        let eps = 0.1;
        let s = AnalyticSpectrum::ConcentrationData { eps, p }.validate().unwrap();
        let m = 400_000;
        let (lo, hi) = (0.2, 1.2);
        let dx = (hi - lo) / m as f64;
        let riemann: f64 = (0..m)
            .map(|i| {
                let w = lo + (i as f64 + 0.5) * dx;
                s.value(w, 0.0).powf(p) * dx
            })
            .sum::<f64>()
            .powf(1.0 / p);
        let closed = concentration_norm(p);
        assert!(
            (riemann - closed).abs() < 2e-3 * closed,
            "riemann {riemann} vs closed {closed}"
        );
    }
}
