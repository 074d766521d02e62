//! Occupation-form sum over the four nontrivial sign families.
//!
//! Each family carries its own reduced kernel and frequency-ratio triple;
//! the integrand is the canonical occupation bracket
//! `n1 n2 n3 + n1 n2 n0 - n1 n3 n0 - n2 n3 n0` sampled at those ratios.
//! This route never forms the rescaled variable, so it is an algebraically
//! independent check on the rescaled evaluators and the natural reference
//! for the Monte Carlo oracle, which works family by family in the same
//! variables.
//!
//! Conditioning caveat: two of the family kernels grow like
//! `u^-(2 beta + 3)` toward the resolution floor while their sample
//! arguments scale like `omega / u`.  On compactly supported spectra those
//! samples vanish and the route matches the rescaled evaluators to machine
//! precision, but on spectra with extrapolated power-law tails and
//! `beta > 0` the near-floor nodes amplify interpolation error of the
//! exactly-cancelling equilibrium bracket.  For such fields either use the
//! rescaled split evaluator, whose cancellations are carried analytically
//! by the quadrature tables, or truncate the kernel with a positive
//! interaction cutoff.

use super::{outside_span, CollisionEvaluator, PointEval, Sampler};
use crate::error::Result;
use crate::field::SpectralForm;
use crate::numerics::CompensatedSum;
use crate::resonance::ResonanceQuad;

pub struct SumFormEvaluator;

impl CollisionEvaluator for SumFormEvaluator {
    fn name(&self) -> &'static str {
        "sum-form"
    }

    fn native_form(&self) -> SpectralForm {
        SpectralForm::Occupation
    }

    fn eval(
        &self,
        sampler: &dyn Sampler,
        omega: f64,
        quad: &ResonanceQuad,
    ) -> Result<PointEval> {
        let gamma = quad.params().gamma_scale();
        let span = sampler.span();
        let f0 = super::sample_as(sampler, SpectralForm::Occupation, gamma, omega)?;
        let f0_outside = outside_span(span, omega);
        let mut value = CompensatedSum::new();
        let mut gain = CompensatedSum::new();
        let mut extrap = CompensatedSum::new();

        for node in quad.nodes() {
            let mut node_value = 0.0;
            let mut node_gain = 0.0;
            let mut outside = if f0_outside { 1u32 } else { 0 };
            for fam in 0..4 {
                let mut f = [0.0; 3];
                for i in 0..3 {
                    let arg = omega * node.fam_nodes[fam][i];
                    if outside_span(span, arg) {
                        outside += 1;
                    }
                    f[i] = super::sample_as(sampler, SpectralForm::Occupation, gamma, arg)?;
                }
                let t1 = f[0] * f[1] * f[2];
                let t2 = f[0] * f[1] * f0;
                let t3 = f[0] * f[2] * f0;
                let t4 = f[1] * f[2] * f0;
                node_value += node.fam_kernel[fam] * ((t1 + t2) - (t3 + t4));
                node_gain += node.fam_kernel[fam] * (t1 + t2 + t3 + t4);
            }
            value.add(node.weight * node_value);
            gain.add(node.weight * node_gain);
            if outside > 0 {
                extrap.add(node.weight * node_gain * outside as f64 / 13.0);
            }
        }
        let prefactor = ((4.0 * quad.params().beta() + 3.0) * omega.ln()).exp();
        Ok(PointEval {
            value: prefactor * value.value(),
            gain: prefactor * gain.value(),
            extrap_mass: prefactor * extrap.value(),
        })
    }
}
