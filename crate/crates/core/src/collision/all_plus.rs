//! Sign-definite majorant of the collision operator.
//!
//! Same family decomposition as the occupation-form sum, but with every
//! bracket term taken positively.  For nonnegative spectra the result
//! bounds the magnitude of the true operator term by term, which makes it
//! the right object for weighted trilinear-bound probes and the natural
//! normalizer when quoting stationarity residuals.

use super::{outside_span, sample_as, CollisionEvaluator, PointEval, Sampler};
use crate::error::Result;
use crate::field::SpectralForm;
use crate::numerics::CompensatedSum;
use crate::resonance::ResonanceQuad;

pub struct AllPlusEvaluator;

impl CollisionEvaluator for AllPlusEvaluator {
    fn name(&self) -> &'static str {
        "all-plus"
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
        let f0 = sample_as(sampler, SpectralForm::Occupation, gamma, omega)?;
        let f0_outside = outside_span(span, omega);
        let mut value = CompensatedSum::new();
        let mut extrap = CompensatedSum::new();

        for node in quad.nodes() {
            let mut node_value = 0.0;
            let mut outside = if f0_outside { 1u32 } else { 0 };
            for fam in 0..4 {
                let mut f = [0.0; 3];
                for i in 0..3 {
                    let arg = omega * node.fam_nodes[fam][i];
                    if outside_span(span, arg) {
                        outside += 1;
                    }
                    f[i] = sample_as(sampler, SpectralForm::Occupation, gamma, arg)?;
                }
                let t1 = f[0] * f[1] * f[2];
                let t2 = f[0] * f[1] * f0;
                let t3 = f[0] * f[2] * f0;
                let t4 = f[1] * f[2] * f0;
                node_value += node.fam_kernel[fam] * (t1 + t2 + t3 + t4);
            }
            value.add(node.weight * node_value);
            if outside > 0 {
                extrap.add(node.weight * node_value * outside as f64 / 13.0);
            }
        }
        let prefactor = ((4.0 * quad.params().beta() + 3.0) * omega.ln()).exp();
        let value = prefactor * value.value();
        Ok(PointEval {
            value,
            gain: value,
            extrap_mass: prefactor * extrap.value(),
        })
    }
}
