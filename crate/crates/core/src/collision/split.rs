//! Default rescaled-form evaluator with analytic cancellation.
//!
//! Near the lower end of the `u` range three of the four frequency ratios
//! collapse onto each other and the literal double sum loses all its
//! leading digits.  This route regroups each scale slot as
//!
//! ```text
//! (v2^a - v1^a) N2 N3 N4  +  (N1 - N2) N3 N4
//!   + (v4^a - v3^a) N1 N2 N4  +  v4^a (N3 - N4) N1 N2
//! ```
//!
//! where the power differences come precomputed from `expm1`-based formulas
//! and the sample differences pair arguments whose ratio tends to one, so
//! every term is small *by construction* rather than by cancellation.  The
//! nodal snap window of `SpectrumField::sample` additionally makes paired
//! samples bitwise equal once their arguments are closer than the snap
//! radius, which zeroes the differences exactly where they should vanish.

use super::{outside_span, sample_as, CollisionEvaluator, PointEval, Sampler};
use crate::error::Result;
use crate::field::SpectralForm;
use crate::numerics::CompensatedSum;
use crate::resonance::ResonanceQuad;

pub struct SplitEvaluator;

impl CollisionEvaluator for SplitEvaluator {
    fn name(&self) -> &'static str {
        "split"
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
                let t1 = node.dv21 * n[1] * n[2] * n[3];
                let t2 = (n[0] - n[1]) * n[2] * n[3];
                let t3 = node.dv43 * n[0] * n[1] * n[3];
                let t4 = node.va[3] * (n[2] - n[3]) * n[0] * n[1];
                node_value += sign_k * node.vk_b[k] * (t1 + t2 + t3 + t4);
                node_gain +=
                    node.vk_b[k] * (t1.abs() + t2.abs() + t3.abs() + t4.abs());
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
