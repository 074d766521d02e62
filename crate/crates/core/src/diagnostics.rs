//! Conserved-quantity integrals, weighted norms, stationarity and scaling
//! residuals, and the band-limited smoothing seminorm.

use crate::analytic::AnalyticSpectrum;
use crate::collision::{AnalyticSampler, EvaluatorKind, ScaledSampler};
use crate::error::{KweError, Result};
use crate::field::{GridFunction, SpectralForm, SpectrumField};
use crate::numerics::CompensatedSum;
use crate::params::ModelParams;
use crate::resonance::ResonanceQuad;
use crate::tol;

/// Wave action `int n(omega) omega d omega` over the grid span.
pub fn mass(field: &SpectrumField, params: &ModelParams) -> Result<f64> {
    let n = field.convert_form(params, SpectralForm::Occupation)?;
    let vals: Vec<f64> = n
        .grid()
        .nodes()
        .iter()
        .zip(n.values())
        .map(|(&w, &v)| v * w)
        .collect();
    Ok(n.grid().integrate(&vals))
}

/// Energy `int n(omega) omega^2 d omega` over the grid span.
pub fn energy(field: &SpectrumField, params: &ModelParams) -> Result<f64> {
    let n = field.convert_form(params, SpectralForm::Occupation)?;
    let vals: Vec<f64> = n
        .grid()
        .nodes()
        .iter()
        .zip(n.values())
        .map(|(&w, &v)| v * w * w)
        .collect();
    Ok(n.grid().integrate(&vals))
}

/// Entropy `int ln(n(omega)) omega d omega` over the grid span.  Defined
/// only for strictly positive occupation values.
pub fn entropy(field: &SpectrumField, params: &ModelParams) -> Result<f64> {
    let n = field.convert_form(params, SpectralForm::Occupation)?;
    let mut vals = Vec::with_capacity(n.grid().len());
    for (j, (&w, &v)) in n.grid().nodes().iter().zip(n.values()).enumerate() {
        if v <= 0.0 {
            return Err(KweError::NonPositiveValue { node: j });
        }
        vals.push(v.ln() * w);
    }
    Ok(n.grid().integrate(&vals))
}

/// Two-piece polynomial weight `m(omega)`: `omega^(-theta)` at and below
/// `omega = 1`, `omega^gamma_w` above it.  `theta` is the power allowance
/// granted near zero; `gamma_w` is the decay demanded at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedNormSpec {
    pub theta: f64,
    pub gamma_w: f64,
}

impl WeightedNormSpec {
    /// The exponent pair under which the all-plus collision term maps the
    /// weighted sup ball into itself (cubically) for `beta` in `[-1/2, 0]`.
    pub fn for_beta(beta: f64) -> Self {
        Self {
            theta: -(2.0 * beta + 0.5),
            gamma_w: 2.0 * beta + 2.5,
        }
    }

    /// Evaluate the weight at one frequency.
    pub fn weight(&self, omega: f64) -> f64 {
        if omega <= 1.0 {
            omega.powf(-self.theta)
        } else {
            omega.powf(self.gamma_w)
        }
    }
}

/// The `for_beta` weight as a plain function.
pub fn weight_m(omega: f64, beta: f64) -> f64 {
    WeightedNormSpec::for_beta(beta).weight(omega)
}

/// `sup_j m(omega_j) |values_j|` over an arbitrary frequency list.
pub fn weighted_sup_norm(omegas: &[f64], values: &[f64], spec: &WeightedNormSpec) -> f64 {
    assert_eq!(omegas.len(), values.len());
    omegas
        .iter()
        .zip(values)
        .fold(0.0f64, |acc, (&w, &v)| acc.max(spec.weight(w) * v.abs()))
}

/// Combined regularity norm of a spectrum: the sup of the rescaled values
/// plus the `L^(2 p0)` and sup norms of their logarithmic derivative.
pub fn regularity_norm(field: &SpectrumField, params: &ModelParams) -> Result<f64> {
    let n = field.convert_form(params, SpectralForm::Rescaled)?;
    let sup_n = n.values().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let dn = n.log_derivative();
    Ok(sup_n + dn.lp_norm(2.0 * params.p0() as f64) + dn.sup_norm())
}

/// Band-limited smoothing seminorm of a nodal function `F` (typically a
/// logarithmic derivative), combining a short-range difference quotient of
/// order `beta + 1` with a near-band weighted difference.  Returns the
/// square root of the two band integrals.  Meaningful for
/// `beta in (-3/4, 3/4)` only; other values signal a domain error.
pub fn smoothing_seminorm(f: &GridFunction, beta: f64) -> Result<f64> {
    if !beta.is_finite() || beta <= -0.75 || beta >= 0.75 {
        return Err(KweError::Domain(format!(
            "smoothing seminorm is defined for beta in (-3/4, 3/4), got {beta}"
        )));
    }
    let grid = f.grid();
    let h = grid.log_step();
    let vals = f.values();
    let n = vals.len();

    let band1 = 1.5f64.ln();
    let band2 = 2.0f64.ln();
    let kmax1 = (band1 / h).floor() as usize;
    let kmax2 = (band2 / h).floor() as usize;

    let mut acc = CompensatedSum::new();
    for i in 0..n {
        let wi = grid.weight(i);
        let oi = grid.omega(i);
        for k in 1..=kmax2.min(n - 1 - i) {
            let j = i + k;
            let d = vals[i] - vals[j];
            let d2 = d * d;
            let wj = grid.weight(j);
            let oj = grid.omega(j);
            let gap = oj - oi;
            let mut kernel = gap.powf(2.0 * beta) * (oi * oj).powf(-(2.0 * beta + 1.0) / 2.0);
            if k <= kmax1 {
                kernel += gap.powf(-(beta + 1.0)) * (oi * oj).powf(beta / 2.0);
            }
            // Unordered pair visited once; the seminorm counts both orders.
            acc.add(2.0 * wi * wj * d2 * kernel);
        }
        // Diagonal strip |ln(omega'/omega)| < h/2, integrated in closed form
        // with the local slope standing in for the difference quotient.
        let g = if i == 0 {
            (vals[1] - vals[0]) / h
        } else if i == n - 1 {
            (vals[n - 1] - vals[n - 2]) / h
        } else {
            (vals[i + 1] - vals[i - 1]) / (2.0 * h)
        };
        let g2h = g * g * h * oi;
        let half = 0.5 * h;
        acc.add(g2h * 2.0 * half.powf(2.0 - beta) / (2.0 - beta));
        acc.add(g2h * 2.0 * half.powf(2.0 * beta + 3.0) / (2.0 * beta + 3.0));
    }
    Ok(acc.value().max(0.0).sqrt())
}

/// Gain-normalized stationarity residuals `|C(n)| / C_plus(n)` of a
/// closed-form spectrum at the given frequencies, using the occupation-form
/// family sum.  Zero means stationary to within rounding of the
/// sign-definite magnitude.
pub fn stationarity_residuals(
    spectrum: &AnalyticSpectrum,
    params: &ModelParams,
    quad: &ResonanceQuad,
    omegas: &[f64],
) -> Result<Vec<f64>> {
    let sampler = AnalyticSampler::new(
        spectrum.clone(),
        params.beta(),
        SpectralForm::Occupation,
    )?;
    let evaluator = EvaluatorKind::SumForm.instance();
    omegas
        .iter()
        .enumerate()
        .map(|(i, &omega)| {
            let point = evaluator.eval(&sampler, omega, quad)?;
            if !(point.value.is_finite() && point.gain.is_finite()) {
                return Err(KweError::NonFinite { node: i });
            }
            Ok(point.value.abs() / (point.gain + tol::TINY))
        })
        .collect()
}

/// Residual of the scaling covariance of the occupation-form operator:
/// evaluating on a frequency-rescaled spectrum must match rescaling the
/// evaluation point, up to the power `-(4 beta + 3)` of the scale factor.
pub fn scaling_covariance_residual(
    spectrum: &AnalyticSpectrum,
    lambda: f64,
    omega: f64,
    quad: &ResonanceQuad,
) -> Result<f64> {
    if lambda <= 0.0 || !lambda.is_finite() {
        return Err(KweError::Domain(format!(
            "scale factor must be positive, got {lambda}"
        )));
    }
    let beta = quad.params().beta();
    let sampler = AnalyticSampler::new(spectrum.clone(), beta, SpectralForm::Occupation)?;
    let evaluator = EvaluatorKind::SumForm.instance();
    let scaled = ScaledSampler::new(&sampler, lambda);
    let a = evaluator.eval(&scaled, omega, quad)?;
    let b = evaluator.eval(&sampler, lambda * omega, quad)?;
    let factor = lambda.powf(-(4.0 * beta + 3.0));
    Ok((a.value - factor * b.value).abs() / (factor * b.value.abs() + tol::TINY))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Extrapolation;
    use crate::grid::FrequencyGrid;

    const E: f64 = std::f64::consts::E;

    fn params(beta: f64) -> ModelParams {
        ModelParams::new(beta, 2, 0.0).unwrap()
    }

    fn unit_grid(n: usize) -> FrequencyGrid {
        FrequencyGrid::log_uniform(1.0, E, n).unwrap()
    }

    fn occupation(n: usize, f: impl Fn(f64) -> f64) -> SpectrumField {
        SpectrumField::tabulate(
            unit_grid(n),
            SpectralForm::Occupation,
            Extrapolation::Constant,
            f,
        )
        .unwrap()
    }

    #[test]
    fn mass_of_constant_occupation() {
        let f = occupation(2048, |_| 1.0);
        let expect = (E * E - 1.0) / 2.0;
        let got = mass(&f, &params(0.0)).unwrap();
        assert!((got - expect).abs() < tol::CLOSED_FORM_INTEGRAL, "got {got}");
    }

    #[test]
    fn mass_of_inverse_frequency() {
        let f = occupation(2048, |w| 1.0 / w);
        let got = mass(&f, &params(0.3)).unwrap();
        assert!((got - (E - 1.0)).abs() < tol::CLOSED_FORM_INTEGRAL, "got {got}");
    }

    #[test]
    fn energy_of_inverse_square() {
        let f = occupation(2048, |w| 1.0 / (w * w));
        let got = energy(&f, &params(0.0)).unwrap();
        assert!((got - (E - 1.0)).abs() < tol::CLOSED_FORM_INTEGRAL, "got {got}");
    }

    #[test]
    fn entropy_closed_forms() {
        let f = occupation(2048, |_| E);
        let expect = (E * E - 1.0) / 2.0;
        let got = entropy(&f, &params(0.0)).unwrap();
        assert!((got - expect).abs() < tol::CLOSED_FORM_INTEGRAL, "got {got}");
        // ln(1) = 0 bit for bit, so the entropy of a unit spectrum is exact.
        let f = occupation(64, |_| 1.0);
        assert_eq!(entropy(&f, &params(0.0)).unwrap(), 0.0);
    }

    #[test]
    fn entropy_rejects_vanishing_occupation() {
        let g = unit_grid(16);
        let mut v = vec![1.0; 16];
        v[7] = 0.0;
        let f = SpectrumField::new(g, v, SpectralForm::Occupation, Extrapolation::Constant)
            .unwrap();
        assert!(matches!(
            entropy(&f, &params(0.0)),
            Err(KweError::NonPositiveValue { node: 7 })
        ));
    }

    #[test]
    fn integrals_are_form_independent() {
        let p = params(0.25);
        let f = occupation(2048, |w| 1.0 / w);
        let r = f.convert_form(&p, SpectralForm::Rescaled).unwrap();
        let a = mass(&f, &p).unwrap();
        let b = mass(&r, &p).unwrap();
        assert!(((a - b) / a).abs() < 1e-12);
    }

    #[test]
    fn weighted_sup_norm_inverts_the_weight() {
        let beta = 0.0;
        let spec = WeightedNormSpec::for_beta(beta);
        let omegas = [0.01, 0.1, 1.0, 10.0, 100.0];
        let values: Vec<f64> = omegas.iter().map(|&w| 1.0 / weight_m(w, beta)).collect();
        let got = weighted_sup_norm(&omegas, &values, &spec);
        assert!((got - 1.0).abs() < 1e-14);
        // Spot values of the weight itself.
        assert!((weight_m(0.25, 0.0) - 0.5).abs() < 1e-14);
        assert!((weight_m(4.0, 0.0) - 32.0).abs() < 1e-13);
        // A unit weight spec is the plain sup norm, here 1/m(0.01) = 10.
        let unit = WeightedNormSpec {
            theta: 0.0,
            gamma_w: 0.0,
        };
        assert!((weighted_sup_norm(&omegas, &values, &unit) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn regularity_norm_of_constant_is_amplitude() {
        let p = params(0.3);
        let grid = FrequencyGrid::log_uniform(0.1, 10.0, 64).unwrap();
        for amp in [1.0, 2.0] {
            let f = SpectrumField::tabulate(grid.clone(), SpectralForm::Rescaled, Extrapolation::Constant, |_| amp)
                .unwrap();
            let got = regularity_norm(&f, &p).unwrap();
            assert!(
                (got - amp).abs() < 1e-12,
                "constant N = {amp} should have norm {amp}, got {got}"
            );
        }
    }

    #[test]
    fn regularity_norm_of_linear_rescaled_field() {
        let p = params(0.0);
        let f = SpectrumField::tabulate(
            unit_grid(512),
            SpectralForm::Rescaled,
            Extrapolation::Constant,
            |w| w,
        )
        .unwrap();
        // N = omega: sup N = e, sup DN = e, L^4 norm of DN = ((e^5-1)/5)^(1/4).
        let expect = E + E + ((E.powi(5) - 1.0) / 5.0).powf(0.25);
        let got = regularity_norm(&f, &p).unwrap();
        assert!(((got - expect) / expect).abs() < 1e-4, "got {got} vs {expect}");
    }

    #[test]
    fn seminorm_domain() {
        let f = GridFunction::new(unit_grid(64), vec![1.0; 64]);
        assert!(smoothing_seminorm(&f, 0.75).is_err());
        assert!(smoothing_seminorm(&f, -0.75).is_err());
        assert!(smoothing_seminorm(&f, 0.5).is_ok());
    }

    /// Independent reference for the seminorm at beta = 0 with F = ln(omega)
    /// on [1, e]: substituting omega' = omega e^tau reduces both bands to
    /// one-dimensional integrals of tau^2 e^tau / |e^tau - 1| and
    /// tau^2 e^(tau/2) against the strip length
    /// A(tau) = |{omega : omega and omega e^tau both lie in [1, e]}|,
    /// evaluated here with Simpson's rule.
    #[test]
    fn seminorm_matches_independent_reference() {
        let grid = unit_grid(512);
        let vals: Vec<f64> = grid.nodes().iter().map(|&w| w.ln()).collect();
        let f = GridFunction::new(grid, vals);
        let got = smoothing_seminorm(&f, 0.0).unwrap();

        let strip = |tau: f64| -> f64 {
            let lo = 1.0f64.max((-tau).exp());
            let hi = E.min(E * (-tau).exp());
            (hi - lo).max(0.0)
        };
        let simpson = |k: &dyn Fn(f64) -> f64, half_range: f64| -> f64 {
            let m = 2000;
            let h = 2.0 * half_range / m as f64;
            let mut s = 0.0;
            for i in 0..=m {
                let tau = -half_range + i as f64 * h;
                let w = if i == 0 || i == m {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                s += w * k(tau);
            }
            s * h / 3.0
        };
        let k1 = |tau: f64| {
            if tau.abs() < 1e-12 {
                0.0
            } else {
                tau * tau * tau.exp() / (tau.exp() - 1.0).abs() * strip(tau)
            }
        };
        let k2 = |tau: f64| tau * tau * (0.5 * tau).exp() * strip(tau);
        let reference = (simpson(&k1, 1.5f64.ln()) + simpson(&k2, 2.0f64.ln())).sqrt();
        assert!(
            ((got - reference) / reference).abs() < tol::SEMINORM_REFERENCE_REL,
            "discrete {got} vs reference {reference}"
        );
    }

    #[test]
    fn equilibrium_is_stationary_pointwise() {
        let p = params(0.3);
        let quad = ResonanceQuad::build(&p, 3, 10).unwrap();
        let rj = AnalyticSpectrum::RayleighJeans { c1: 2.0, c2: 3.0 };
        let res = stationarity_residuals(&rj, &p, &quad, &[0.7, 1.0, 5.0]).unwrap();
        for r in res {
            assert!(r < tol::STATIONARITY_RESIDUAL, "residual {r}");
        }
    }

    #[test]
    fn gridded_equilibrium_is_stationary_to_interpolation_accuracy() {
        let p = params(0.0);
        let quad = ResonanceQuad::build(&p, 3, 10).unwrap();
        let grid = FrequencyGrid::log_uniform(0.3, 3.0, 128).unwrap();
        let field = SpectrumField::tabulate(
            grid,
            SpectralForm::Occupation,
            Extrapolation::PowerLawFit,
            |w| 1.0 / w,
        )
        .unwrap();
        let point =
            crate::collision::collide_point(&field, 1.0, &quad, EvaluatorKind::SumForm).unwrap();
        let residual = point.value.abs() / (point.gain + tol::TINY);
        assert!(
            residual < tol::STATIONARITY_RESIDUAL_GRIDDED,
            "residual {residual}"
        );
    }

    #[test]
    fn scaling_covariance_holds_for_bump_data() {
        let p = params(0.0);
        let quad = ResonanceQuad::build(&p, 3, 10).unwrap();
        let bump = AnalyticSpectrum::GaussianBumpInLogOmega {
            center: 1.0,
            width: 1.0,
            amplitude: 1.0,
        };
        for lambda in [0.5, 2.0] {
            let r = scaling_covariance_residual(&bump, lambda, 1.1, &quad).unwrap();
            assert!(r < tol::SCALING_RESIDUAL, "lambda {lambda}: residual {r}");
        }
    }
}
