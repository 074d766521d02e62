//! Literal rescaled-form double sum.
//!
//! The most direct transcription of the reduced operator: for each scale
//! slot `k` and omitted slot `j`, the signed product of the other three
//! rescaled samples, weighted by the precomputed powers of the frequency
//! ratios.  Loses accuracy near the quadrature floor where the terms nearly
//! cancel; kept as an independent cross-check of the `split` route.

use super::{outside_span, sample_as, CollisionEvaluator, PointEval, Sampler};
use crate::error::Result;
use crate::field::SpectralForm;
use crate::numerics::CompensatedSum;
use crate::resonance::ResonanceQuad;

pub struct SymmetricEvaluator;

const SIGN_J: [f64; 4] = [-1.0, 1.0, -1.0, 1.0];

impl CollisionEvaluator for SymmetricEvaluator {
    fn name(&self) -> &'static str {
        "symmetric"
    }

    fn native_form(&self) -> SpectralForm {
        SpectralForm::Rescaled
    }

    fn eval(
        &self,
        sampler: &dyn Sampler,
        omega: f64,
        quad: &ResonanceQuad,
    ) -> Result<PointEval> {
        let gamma = quad.params().gamma_scale();
        let span = sampler.span();
        let mut value = CompensatedSum::new();
        let mut gain = CompensatedSum::new();
        let mut extrap = CompensatedSum::new();

        for node in quad.nodes() {
            let mut node_value = 0.0;
            let mut node_gain = 0.0;
            let mut outside = 0u32;
            for k in 0..4 {
                let mut n = [0.0; 4];
                for i in 0..4 {
                    let arg = omega * node.v[i] / node.v[k];
                    if outside_span(span, arg) {
                        outside += 1;
                    }
                    n[i] = sample_as(sampler, SpectralForm::Rescaled, gamma, arg)?;
                }
                let sign_k = if k % 2 == 0 { -1.0 } else { 1.0 };
                for j in 0..4 {
                    let mut prod = 1.0;
                    for i in 0..4 {
                        if i != j {
                            prod *= n[i];
                        }
                    }
                    let term = node.vk_b[k] * node.va[j] * prod;
                    node_value += sign_k * SIGN_J[j] * term;
                    node_gain += term.abs();
                }
            }
            let w = node.weight * node.w_kernel;
            value.add(w * node_value);
            gain.add(w * node_gain);
            if outside > 0 {
                extrap.add(w * node_gain * outside as f64 / 16.0);
            }
        }
        Ok(PointEval {
            value: value.value(),
            gain: gain.value(),
            extrap_mass: extrap.value(),
        })
    }
}
