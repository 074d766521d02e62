//! Resonant-manifold geometry and the precomputed quadrature used by every
//! collision evaluator.
//!
//! After eliminating both delta constraints, each of the four nontrivial
//! sign families of the collision integral reduces to a one-dimensional
//! integral over `u in (0, 1]`.  The frequency ratios, kernel weights, and
//! their stably-computed powers only depend on `u` and `beta`, so they are
//! tabulated once per quadrature and shared across grid points, evaluators,
//! and time steps.

use crate::error::{KweError, Result};
use crate::numerics::{gauss_legendre, CompensatedSum};
use crate::params::ModelParams;

/// Resolution floor of the `u`-quadrature.  The reduced integrands are
/// integrable on (0, 1]; truncating below this floor changes the integrals
/// by far less than any tolerance used in this crate, while keeping the
/// node count finite.
pub const BASE_U_FLOOR: f64 = 1e-12;

/// Frequency ratios `(v1, v2, v3, v4) = ((1+u)/D, 1, u(1+u)/D, u/D)` with
/// `D = 1 + u + u^2`.  These are the four frequencies of a resonant
/// quadruple, normalized by the largest.
pub fn v_values(u: f64) -> Result<[f64; 4]> {
    if !(0.0..=1.0).contains(&u) {
        return Err(KweError::Domain(format!(
            "resonance parameter must lie in [0, 1], got {u}"
        )));
    }
    let d = 1.0 + u + u * u;
    Ok([(1.0 + u) / d, 1.0, u * (1.0 + u) / d, u / d])
}

/// Residuals of the two conservation identities satisfied by `v_values`:
/// `v1 + v3 = v2 + v4` (frequency sum) and `v1^2 + v3^2 + v4^2 = v2^2`
/// (dispersion sum, for the square-root dispersion law).
pub fn resonance_residuals(u: f64) -> Result<(f64, f64)> {
    let [v1, v2, v3, v4] = v_values(u)?;
    Ok((v1 + v3 - v2 - v4, v1 * v1 + v3 * v3 + v4 * v4 - v2 * v2))
}

/// Interaction weight of the rescaled collision form:
/// `W(u) = u^-(2 beta + 1) (1+u)^-(2 beta + 1) D^(3 beta + 1/2)`,
/// evaluated in log space to stay accurate down to the resolution floor.
pub fn weight_w(u: f64, beta: f64) -> Result<f64> {
    if u <= 0.0 || u > 1.0 {
        return Err(KweError::Domain(format!(
            "interaction weight needs u in (0, 1], got {u}"
        )));
    }
    let ln_u = u.ln();
    let ln_1pu = u.ln_1p();
    let ln_d = (u * (1.0 + u)).ln_1p();
    Ok((-(2.0 * beta + 1.0) * (ln_u + ln_1pu) + (3.0 * beta + 0.5) * ln_d).exp())
}

/// Frequency ratios `(u1, u2, u3)` of sign family `family in 1..=4`,
/// normalized by the output frequency.  Families 2 and 4 have ratios
/// proportional to `1/u` and need `u > 0`.
pub fn family_nodes(family: usize, u: f64) -> Result<[f64; 3]> {
    if !(0.0..=1.0).contains(&u) {
        return Err(KweError::Domain(format!(
            "resonance parameter must lie in [0, 1], got {u}"
        )));
    }
    let d = 1.0 + u + u * u;
    match family {
        1 => Ok([(1.0 + u) / d, u * (1.0 + u) / d, u / d]),
        2 | 4 if u == 0.0 => Err(KweError::Domain(
            "families 2 and 4 are singular at u = 0".into(),
        )),
        2 => Ok([u + 1.0, (u + 1.0) / u, d / u]),
        3 => Ok([d / (1.0 + u), u / (1.0 + u), u]),
        4 => Ok([d / ((1.0 + u) * u), 1.0 / (1.0 + u), 1.0 / u]),
        other => Err(KweError::Invalid(format!(
            "sign family index must be 1..=4, got {other}"
        ))),
    }
}

/// Reduced kernel of sign family `family` in the occupation-form family sum.
pub fn family_kernel(family: usize, u: f64, beta: f64) -> Result<f64> {
    if u <= 0.0 || u > 1.0 {
        return Err(KweError::Domain(format!(
            "family kernel needs u in (0, 1], got {u}"
        )));
    }
    let ln_u = u.ln();
    let ln_1pu = u.ln_1p();
    let ln_d = (u * (1.0 + u)).ln_1p();
    let ln_k = match family {
        1 => (2.0 * beta + 2.0) * (ln_u + ln_1pu) - (3.0 * beta + 4.0) * ln_d,
        2 => (beta + 1.0) * ln_d + (2.0 * beta + 2.0) * ln_1pu - (2.0 * beta + 3.0) * ln_u,
        3 => (beta + 1.0) * ln_d + (2.0 * beta + 2.0) * ln_u - (2.0 * beta + 3.0) * ln_1pu,
        4 => (beta + 1.0) * ln_d - (2.0 * beta + 3.0) * (ln_u + ln_1pu),
        other => {
            return Err(KweError::Invalid(format!(
                "sign family index must be 1..=4, got {other}"
            )))
        }
    };
    Ok(ln_k.exp())
}

/// Normalized residuals of the resonance identities of one sign family:
/// the frequency identity `u1 + u2 = u3 + 1` (families all share it) and the
/// family's dispersion identity, each divided by the magnitude of its terms.
pub fn family_resonance_residuals(family: usize, u: f64) -> Result<(f64, f64)> {
    let [u1, u2, u3] = family_nodes(family, u)?;
    let lin = (u1 + u2 - u3 - 1.0) / (u1 + u2 + u3 + 1.0);
    let (q1, q2, q3) = (u1 * u1, u2 * u2, u3 * u3);
    let scale = q1 + q2 + q3 + 1.0;
    let quad = match family {
        1 => q1 + q2 + q3 - 1.0,
        2 => q3 - q1 - q2 - 1.0,
        3 | 4 => q1 - q2 - q3 - 1.0,
        _ => unreachable!("family validated by family_nodes"),
    };
    Ok((lin, quad / scale))
}

/// One precomputed quadrature node: the Gauss–Legendre abscissa and weight
/// plus every `u`-dependent quantity the collision evaluators need.
#[derive(Debug, Clone)]
pub struct QuadNode {
    /// Abscissa in (0, 1].
    pub u: f64,
    /// Quadrature weight (already includes the panel Jacobian).
    pub weight: f64,
    /// Frequency ratios `(v1, v2, v3, v4)`.
    pub v: [f64; 4],
    /// Interaction weight `W(u)`.
    pub w_kernel: f64,
    /// `v_j^a` with `a = 2 beta + 3/2` (the form-conversion exponent).
    pub va: [f64; 4],
    /// `v_k^b` with `b = 2 beta - 1/2`.
    pub vk_b: [f64; 4],
    /// `v2^a - v1^a`, computed without cancellation.
    pub dv21: f64,
    /// `v4^a - v3^a`, computed without cancellation.
    pub dv43: f64,
    /// Frequency ratios of the four sign families, table order.
    pub fam_nodes: [[f64; 3]; 4],
    /// Reduced kernels of the four sign families.
    pub fam_kernel: [f64; 4],
}

/// Composite Gauss–Legendre quadrature over `u in [u_floor, 1]` on
/// geometrically spaced panels, with all node data precomputed for a fixed
/// `beta`.
#[derive(Debug, Clone)]
pub struct ResonanceQuad {
    params: ModelParams,
    u_floor: f64,
    panels_per_decade: usize,
    order: usize,
    nodes: Vec<QuadNode>,
}

impl ResonanceQuad {
    /// Build the quadrature for `params`, honoring the configured truncation
    /// `params.epsilon()` (clipped below by the resolution floor).
    pub fn build(params: &ModelParams, panels_per_decade: usize, order: usize) -> Result<Self> {
        if panels_per_decade < 2 {
            return Err(KweError::Domain(format!(
                "need at least 2 quadrature panels per decade, got {panels_per_decade}"
            )));
        }
        if !(4..=32).contains(&order) {
            return Err(KweError::Domain(format!(
                "quadrature order must lie in 4..=32, got {order}"
            )));
        }
        let floor = params.epsilon().max(BASE_U_FLOOR);
        Self::assemble(params.clone(), floor, panels_per_decade, order)
    }

    /// Rebuild with the truncation floor `max(eps, resolution floor)`,
    /// keeping panel density and order.  Used for truncation sweeps and for
    /// evolving truncated dynamics.
    pub fn restricted(&self, eps: f64) -> Result<Self> {
        if !eps.is_finite() || eps < 0.0 || eps >= 1.0 {
            return Err(KweError::Domain(format!(
                "truncation parameter must lie in [0, 1), got {eps}"
            )));
        }
        let floor = eps.max(BASE_U_FLOOR);
        if floor == self.u_floor {
            return Ok(self.clone());
        }
        Self::assemble(
            self.params.clone(),
            floor,
            self.panels_per_decade,
            self.order,
        )
    }

    fn assemble(
        params: ModelParams,
        u_floor: f64,
        panels_per_decade: usize,
        order: usize,
    ) -> Result<Self> {
        if u_floor >= 1.0 {
            return Err(KweError::Domain(format!(
                "quadrature floor must be below 1, got {u_floor}"
            )));
        }
        let beta = params.beta();
        let a = params.gamma_scale();
        let b = 2.0 * beta - 0.5;

        // Panel boundaries descend geometrically from 1 to the floor.
        let mut bounds = vec![1.0f64];
        let mut k = 1usize;
        loop {
            let bnd = 10f64.powf(-(k as f64) / panels_per_decade as f64);
            if bnd <= u_floor * (1.0 + 1e-12) {
                bounds.push(u_floor);
                break;
            }
            bounds.push(bnd);
            k += 1;
        }

        let (gl_x, gl_w) = gauss_legendre(order);
        let mut nodes = Vec::with_capacity((bounds.len() - 1) * order);
        for panel in 0..bounds.len() - 1 {
            let hi = bounds[panel];
            let lo = bounds[panel + 1];
            let mid = 0.5 * (hi + lo);
            let half = 0.5 * (hi - lo);
            for (&x, &w) in gl_x.iter().zip(&gl_w) {
                let u = mid + half * x;
                let weight = half * w;

                let ln_u = u.ln();
                let ln_1pu = u.ln_1p();
                let ln_d = (u * (1.0 + u)).ln_1p();
                // ln v1 = -ln(1 + u^2/(1+u)) since D/(1+u) = 1 + u^2/(1+u).
                let ln_v1 = -(u * u / (1.0 + u)).ln_1p();
                let ln_v3 = ln_u + ln_1pu - ln_d;
                let ln_v4 = ln_u - ln_d;

                let va = [(a * ln_v1).exp(), 1.0, (a * ln_v3).exp(), (a * ln_v4).exp()];
                let vk_b = [(b * ln_v1).exp(), 1.0, (b * ln_v3).exp(), (b * ln_v4).exp()];
                let dv21 = -f64::exp_m1(a * ln_v1);
                let dv43 = -va[3] * f64::exp_m1(a * ln_1pu);

                nodes.push(QuadNode {
                    u,
                    weight,
                    v: v_values(u)?,
                    w_kernel: weight_w(u, beta)?,
                    va,
                    vk_b,
                    dv21,
                    dv43,
                    fam_nodes: [
                        family_nodes(1, u)?,
                        family_nodes(2, u)?,
                        family_nodes(3, u)?,
                        family_nodes(4, u)?,
                    ],
                    fam_kernel: [
                        family_kernel(1, u, beta)?,
                        family_kernel(2, u, beta)?,
                        family_kernel(3, u, beta)?,
                        family_kernel(4, u, beta)?,
                    ],
                });
            }
        }
        Ok(Self {
            params,
            u_floor,
            panels_per_decade,
            order,
            nodes,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn u_floor(&self) -> f64 {
        self.u_floor
    }

    pub fn panels_per_decade(&self) -> usize {
        self.panels_per_decade
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nodes(&self) -> &[QuadNode] {
        &self.nodes
    }

    /// Compensated quadrature of a per-node integrand over `[u_floor, 1]`.
    pub fn integrate_u(&self, f: impl Fn(&QuadNode) -> f64) -> f64 {
        let mut acc = CompensatedSum::new();
        for node in &self.nodes {
            acc.add(node.weight * f(node));
        }
        acc.value()
    }
}
