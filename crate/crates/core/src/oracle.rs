//! Monte Carlo cross-check of the collision operator.
//!
//! The reduced one-dimensional quadrature used everywhere else in the crate
//! rests on an exact parametrization of the resonant set.  This module
//! validates it from first principles: it samples the original
//! `(omega_1, omega_2)` integral directly, regularizing the quadratic
//! frequency constraint by a window indicator `1(|F| < delta) / (2 delta)`
//! and resolving the window analytically in `omega_2` for each sampled
//! `omega_1` (the constraint is affine or quadratic in `omega_2`, so its
//! sublevel set is a union of at most two intervals).  Stratified sampling
//! over `omega_1` with per-stratum seeded generators makes every estimate
//! reproducible to the bit.

use crate::analytic::AnalyticSpectrum;
use crate::error::{KweError, Result};
use crate::numerics::CompensatedSum;
use crate::params::ModelParams;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Number of `omega_1` strata per sign family.
const STRATA: usize = 64;

/// Seed mixing constants (splitmix-style multipliers) so that families and
/// strata draw from decorrelated streams of one master seed.
const FAMILY_MIX: u64 = 0x9E37_79B9_7F4A_7C15;
const STRATUM_MIX: u64 = 0xBF58_476D_1CE4_E5B9;

/// Log-space half-width at which a Gaussian bump has decayed below 1e-12
/// of its amplitude: sqrt(2 ln 1e12).
const BUMP_DECAY_SIGMAS: f64 = 7.434;

/// Relative clip keeping sampled frequencies strictly positive so that
/// power-law spectra cannot produce `0 * inf` at the origin.
const EDGE_CLIP: f64 = 1e-10;

/// One sign assignment `(eps_1, eps_2, eps_3)` of the three integration
/// frequencies in the resonance constraint
/// `eps_1 w_1^2 + eps_2 w_2^2 + eps_3 w_3^2 = w^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignFamily {
    PPP,
    PPM,
    PMP,
    PMM,
    MPP,
    MPM,
    MMP,
    MMM,
}

impl SignFamily {
    pub fn signs(self) -> [f64; 3] {
        match self {
            SignFamily::PPP => [1.0, 1.0, 1.0],
            SignFamily::PPM => [1.0, 1.0, -1.0],
            SignFamily::PMP => [1.0, -1.0, 1.0],
            SignFamily::PMM => [1.0, -1.0, -1.0],
            SignFamily::MPP => [-1.0, 1.0, 1.0],
            SignFamily::MPM => [-1.0, 1.0, -1.0],
            SignFamily::MMP => [-1.0, -1.0, 1.0],
            SignFamily::MMM => [-1.0, -1.0, -1.0],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SignFamily::PPP => "+++",
            SignFamily::PPM => "++-",
            SignFamily::PMP => "+-+",
            SignFamily::PMM => "+--",
            SignFamily::MPP => "-++",
            SignFamily::MPM => "-+-",
            SignFamily::MMP => "--+",
            SignFamily::MMM => "---",
        }
    }

    /// The four families whose resonant sets have interior solutions; the
    /// other four contribute nothing in the vanishing-regularization limit.
    pub fn nontrivial() -> [SignFamily; 4] {
        [
            SignFamily::PPP,
            SignFamily::MMP,
            SignFamily::MPM,
            SignFamily::PMM,
        ]
    }

    fn index(self) -> u64 {
        match self {
            SignFamily::PPP => 0,
            SignFamily::PPM => 1,
            SignFamily::PMP => 2,
            SignFamily::PMM => 3,
            SignFamily::MPP => 4,
            SignFamily::MPM => 5,
            SignFamily::MMP => 6,
            SignFamily::MMM => 7,
        }
    }
}

/// A Monte Carlo estimate with its one-sigma sampling error.
#[derive(Debug, Clone, Copy)]
pub struct OracleEstimate {
    pub mean: f64,
    pub std_error: f64,
    /// Total draws across all strata of all families involved.
    pub samples: u64,
    /// Width of the constraint regularization window.
    pub delta: f64,
}

/// Interval where a closed-form spectrum exceeds roughly 1e-12 of its
/// scale.  Decaying spectra without a finite cutoff (equilibrium and
/// power-law profiles) are windowed around the evaluation frequency; the
/// truncation is part of what makes those oracles exploratory.
fn effective_support(spectrum: &AnalyticSpectrum, omega: f64) -> Result<(f64, f64)> {
    match *spectrum {
        AnalyticSpectrum::GaussianBumpInLogOmega {
            center,
            width,
            amplitude,
        } => {
            if amplitude == 0.0 {
                return Err(KweError::EmptySupport);
            }
            let half = BUMP_DECAY_SIGMAS * width;
            Ok((center * (-half).exp(), center * half.exp()))
        }
        AnalyticSpectrum::ConcentrationData { eps, .. } => {
            Ok((1.0 / 3.0 - eps * eps, 1.0 + eps * eps))
        }
        AnalyticSpectrum::RayleighJeans { .. }
        | AnalyticSpectrum::KolmogorovZakharovMass
        | AnalyticSpectrum::KolmogorovZakharovEnergy
        | AnalyticSpectrum::PowerLaw { .. } => Ok((omega / 16.0, 16.0 * omega)),
    }
}

/// Real roots of `a x^2 + b x + c = 0`, in ascending order, using the
/// cancellation-free quadratic formula.  `a` is bounded away from zero by
/// the callers (it is +-2).
fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![];
    }
    if disc == 0.0 {
        return vec![-b / (2.0 * a)];
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let (r1, r2) = if q == 0.0 {
        (0.0, 0.0)
    } else {
        (q / a, c / q)
    };
    let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
    vec![lo, hi]
}

/// The window `{omega_2 in (lo, hi) : |F(omega_2)| < delta}` of the
/// regularized constraint, as disjoint intervals and their total length.
/// `F(x) = a x^2 + b x + c` with `a in {-2, 0, 2}`.
fn constraint_window(a: f64, b: f64, c: f64, delta: f64, lo: f64, hi: f64) -> (Vec<(f64, f64)>, f64) {
    if hi <= lo {
        return (vec![], 0.0);
    }
    let mut cuts: Vec<f64> = vec![lo];
    if a == 0.0 {
        // Affine constraint: one interval between the two level crossings.
        if b.abs() < 1e-30 {
            return (vec![], 0.0);
        }
        let r1 = (-delta - c) / b;
        let r2 = (delta - c) / b;
        for r in [r1.min(r2), r1.max(r2)] {
            if r > lo && r < hi {
                cuts.push(r);
            }
        }
    } else {
        let mut roots = quadratic_roots(a, b, c - delta);
        roots.extend(quadratic_roots(a, b, c + delta));
        roots.sort_by(|x, y| x.partial_cmp(y).expect("finite roots"));
        for r in roots {
            if r > lo && r < hi {
                cuts.push(r);
            }
        }
    }
    cuts.push(hi);
    let mut intervals = Vec::new();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (s, e) = (w[0], w[1]);
        if e <= s {
            continue;
        }
        let m = 0.5 * (s + e);
        if (a * m * m + b * m + c).abs() < delta {
            intervals.push((s, e));
            total += e - s;
        }
    }
    (intervals, total)
}

/// Disjoint `omega_1` intervals that can contribute: either `omega_1` lies
/// in the spectrum's support, or the pair `(omega_2, omega_3)` can (their
/// difference is pinned to `omega_1 - omega`).
fn omega1_intervals(support: (f64, f64), omega: f64) -> Vec<(f64, f64)> {
    let (s_lo, s_hi) = support;
    let width = s_hi - s_lo;
    let a = (s_lo, s_hi);
    let b = ((omega - width).max(EDGE_CLIP * omega), omega + width);
    let (first, second) = if a.0 <= b.0 { (a, b) } else { (b, a) };
    if second.0 <= first.1 {
        vec![(first.0, first.1.max(second.1))]
    } else {
        vec![first, second]
    }
}

/// Estimate one family's contribution.  Returns `(mean, variance)` where
/// the variance already includes the stratification factors.
fn family_contribution(
    family: SignFamily,
    spectrum: &AnalyticSpectrum,
    omega: f64,
    params: &ModelParams,
    delta: f64,
    samples: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    let beta = params.beta();
    let [e1, e2, e3] = family.signs();
    let support = effective_support(spectrum, omega)?;
    let intervals = omega1_intervals(support, omega);
    let total_len: f64 = intervals.iter().map(|(a, b)| b - a).sum();
    if !(total_len > 0.0) {
        return Err(KweError::EmptySupport);
    }

    // Map an arc-length coordinate in [0, total_len] to omega_1.
    let locate = |arc: f64| -> f64 {
        let mut rem = arc;
        for &(a, b) in &intervals {
            let len = b - a;
            if rem <= len {
                return a + rem;
            }
            rem -= len;
        }
        intervals.last().expect("nonempty intervals").1
    };

    let per_stratum = (samples as usize / STRATA).max(2);
    let stratum_len = total_len / STRATA as f64;
    let value_of = |w1: f64, rng: &mut ChaCha8Rng| -> f64 {
        // Constraint as a polynomial in omega_2 after eliminating omega_3.
        let a = e2 + e3;
        let b = 2.0 * e3 * (w1 - omega);
        let c = e1 * w1 * w1 + e3 * (w1 - omega) * (w1 - omega) - omega * omega;
        // omega_2 must keep omega_3 = omega_1 + omega_2 - omega positive,
        // and only the hull of the support pair can contribute.
        let shift = omega - w1;
        let lo = (support.0.min(shift + support.0))
            .max(shift)
            .max(EDGE_CLIP * omega);
        let hi = support.1.max(shift + support.1);
        let (window, len) = constraint_window(a, b, c, delta, lo, hi);
        if len <= 0.0 {
            return 0.0;
        }
        let mut arc = rng.random::<f64>() * len;
        let mut w2 = window.last().expect("nonempty window").1;
        for &(s, e) in &window {
            let seg = e - s;
            if arc <= seg {
                w2 = s + arc;
                break;
            }
            arc -= seg;
        }
        let w3 = w1 + w2 - omega;
        if w3 <= 0.0 {
            return 0.0;
        }
        let n0 = spectrum.value(omega, beta);
        let n1 = spectrum.value(w1, beta);
        let n2 = spectrum.value(w2, beta);
        let n3 = spectrum.value(w3, beta);
        let bracket = n1 * n2 * n3 + n1 * n2 * n0 - n1 * n3 * n0 - n2 * n3 * n0;
        let g = omega.powf(beta) * (w1 * w2 * w3).powf(beta + 1.0) * bracket;
        len * g / (2.0 * delta)
    };

    let mut mean_acc = CompensatedSum::new();
    let mut var_acc = CompensatedSum::new();
    for k in 0..STRATA {
        let mut rng = ChaCha8Rng::seed_from_u64(
            seed ^ family.index().wrapping_mul(FAMILY_MIX)
                ^ (k as u64 + 1).wrapping_mul(STRATUM_MIX),
        );
        let arc0 = k as f64 * stratum_len;
        let mut s = CompensatedSum::new();
        let mut s2 = CompensatedSum::new();
        for _ in 0..per_stratum {
            let w1 = locate(arc0 + rng.random::<f64>() * stratum_len);
            let v = value_of(w1, &mut rng);
            s.add(v);
            s2.add(v * v);
        }
        let n = per_stratum as f64;
        let m = s.value() / n;
        let var = ((s2.value() - n * m * m) / (n - 1.0)).max(0.0);
        mean_acc.add(stratum_len * m);
        var_acc.add(stratum_len * stratum_len * var / n);
    }
    Ok((mean_acc.value(), var_acc.value()))
}

/// Monte Carlo estimate of the full collision operator (all four
/// nontrivial sign families) at one frequency, in occupation form.
/// `samples` is the draw budget per family.
pub fn mc_collision(
    spectrum: &AnalyticSpectrum,
    omega: f64,
    params: &ModelParams,
    delta: f64,
    samples: u64,
    seed: u64,
) -> Result<OracleEstimate> {
    validate_mc_args(spectrum, omega, delta, samples)?;
    let mut mean = CompensatedSum::new();
    let mut var = CompensatedSum::new();
    for family in SignFamily::nontrivial() {
        let (m, v) = family_contribution(family, spectrum, omega, params, delta, samples, seed)?;
        mean.add(m);
        var.add(v);
    }
    Ok(OracleEstimate {
        mean: mean.value(),
        std_error: var.value().sqrt(),
        samples: 4 * (samples / STRATA as u64).max(2) * STRATA as u64,
        delta,
    })
}

/// Monte Carlo estimate of a single sign family's regularized integral.
pub fn family_probe(
    family: SignFamily,
    spectrum: &AnalyticSpectrum,
    omega: f64,
    params: &ModelParams,
    delta: f64,
    samples: u64,
    seed: u64,
) -> Result<OracleEstimate> {
    validate_mc_args(spectrum, omega, delta, samples)?;
    let (m, v) = family_contribution(family, spectrum, omega, params, delta, samples, seed)?;
    Ok(OracleEstimate {
        mean: m,
        std_error: v.sqrt(),
        samples: (samples / STRATA as u64).max(2) * STRATA as u64,
        delta,
    })
}

/// Regularized contribution of the `(+,+,-)` family at a ladder of window
/// widths.  Its constraint degenerates into a product of two affine
/// factors whose zero set carries no interior: the estimates must decay
/// as the window shrinks, and the decay rate is the quantitative check
/// that this family is negligible.
pub fn trivial_resonance_probe(
    spectrum: &AnalyticSpectrum,
    omega: f64,
    params: &ModelParams,
    deltas: &[f64],
    samples: u64,
    seed: u64,
) -> Result<Vec<OracleEstimate>> {
    deltas
        .iter()
        .map(|&d| family_probe(SignFamily::PPM, spectrum, omega, params, d, samples, seed))
        .collect()
}

fn validate_mc_args(
    spectrum: &AnalyticSpectrum,
    omega: f64,
    delta: f64,
    samples: u64,
) -> Result<()> {
    spectrum.clone().validate()?;
    if !(omega.is_finite() && omega > 0.0) {
        return Err(KweError::Domain(format!(
            "oracle frequency must be positive, got {omega}"
        )));
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(KweError::Domain(format!(
            "regularization width must be positive, got {delta}"
        )));
    }
    if samples < 2 * STRATA as u64 {
        return Err(KweError::Invalid(format!(
            "need at least {} samples per family, got {samples}",
            2 * STRATA
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::{AnalyticSampler, EvaluatorKind};
    use crate::field::SpectralForm;
    use crate::resonance::ResonanceQuad;
    use crate::tol;

    fn bump() -> AnalyticSpectrum {
        AnalyticSpectrum::GaussianBumpInLogOmega {
            center: 1.0,
            width: 0.5,
            amplitude: 1.0,
        }
    }

    #[test]
    fn estimates_are_seed_deterministic() {
        let p = ModelParams::new(0.0, 2, 0.0).unwrap();
        let a = mc_collision(&bump(), 1.0, &p, 1e-2, 2_000, 7).unwrap();
        let b = mc_collision(&bump(), 1.0, &p, 1e-2, 2_000, 7).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
        let c = mc_collision(&bump(), 1.0, &p, 1e-2, 2_000, 8).unwrap();
        assert_ne!(a.mean.to_bits(), c.mean.to_bits());
    }

    #[test]
    fn zero_amplitude_has_empty_support() {
        let p = ModelParams::new(0.0, 2, 0.0).unwrap();
        let flat = AnalyticSpectrum::GaussianBumpInLogOmega {
            center: 1.0,
            width: 0.5,
            amplitude: 0.0,
        };
        assert!(matches!(
            mc_collision(&flat, 1.0, &p, 1e-2, 2_000, 1),
            Err(KweError::EmptySupport)
        ));
    }

    #[test]
    fn undersized_budgets_are_rejected() {
        let p = ModelParams::new(0.0, 2, 0.0).unwrap();
        assert!(mc_collision(&bump(), 1.0, &p, 1e-2, 50, 1).is_err());
        assert!(mc_collision(&bump(), 1.0, &p, -1.0, 2_000, 1).is_err());
    }

    /// The oracle must agree with the reduced quadrature within its own
    /// error bars: |MC(delta/2) - quad| <= 3 (se_1 + se_2 + |MC(delta) -
    /// MC(delta/2)|), the last term standing in for the regularization bias.
    #[test]
    fn oracle_confirms_reduced_quadrature() {
        let p = ModelParams::new(0.0, 2, 0.0).unwrap();
        let quad = ResonanceQuad::build(&p, 4, 12).unwrap();
        let sampler =
            AnalyticSampler::new(bump(), p.beta(), SpectralForm::Occupation).unwrap();
        let fast = EvaluatorKind::SumForm
            .instance()
            .eval(&sampler, 1.0, &quad)
            .unwrap()
            .value;
        let m1 = mc_collision(&bump(), 1.0, &p, 4e-3, 60_000, 123).unwrap();
        let m2 = mc_collision(&bump(), 1.0, &p, 2e-3, 60_000, 123).unwrap();
        let bias = (m1.mean - m2.mean).abs();
        let allowance = tol::ORACLE_SIGMA * (m1.std_error + m2.std_error + bias);
        let diff = (m2.mean - fast).abs();
        assert!(
            diff <= allowance,
            "MC {} +- {} vs quadrature {fast}: diff {diff} > allowance {allowance}",
            m2.mean,
            m2.std_error
        );
        // The estimate must also be meaningful: nonzero signal.
        assert!(m2.mean.abs() > 5.0 * m2.std_error);
    }

    /// A constant spectrum makes every bracket vanish term against term in
    /// exact arithmetic, and the cancellation survives floating point
    /// because all four products are bit-identical.
    #[test]
    fn constant_spectrum_estimates_zero_exactly() {
        let p = ModelParams::new(0.0, 2, 0.0).unwrap();
        let flat = AnalyticSpectrum::PowerLaw { exponent: 0.0 };
        let est = mc_collision(&flat, 1.0, &p, 1e-2, 2_000, 11).unwrap();
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.std_error, 0.0);
    }

    /// The equilibrium spectrum zeroes the bracket on the linear resonance
    /// plane alone (1/n is affine in omega), so even the regularized
    /// estimate is pure rounding noise.
    #[test]
    fn equilibrium_spectrum_estimates_zero_within_errors() {
        let p = ModelParams::new(0.0, 2, 0.0).unwrap();
        let rj = AnalyticSpectrum::RayleighJeans { c1: 1.0, c2: 1.0 };
        let est = mc_collision(&rj, 1.0, &p, 1e-2, 8_000, 5).unwrap();
        assert!(
            est.mean.abs() <= tol::ORACLE_SIGMA * est.std_error + 1e-10,
            "equilibrium estimate {} +- {} not consistent with zero",
            est.mean,
            est.std_error
        );
    }

    /// With all three signs negative the constraint value stays at or below
    /// -omega^2, so no sample can land in any window narrower than omega^2:
    /// the estimate is identically zero, not merely small.
    #[test]
    fn impossible_sign_family_is_exactly_zero() {
        let p = ModelParams::new(0.0, 2, 0.0).unwrap();
        let est = family_probe(SignFamily::MMM, &bump(), 1.0, &p, 1e-2, 2_000, 3).unwrap();
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn degenerate_family_contribution_shrinks_with_the_window() {
        let p = ModelParams::new(0.0, 2, 0.0).unwrap();
        let probes =
            trivial_resonance_probe(&bump(), 1.0, &p, &[1e-1, 1e-2], 40_000, 31).unwrap();
        let coarse = probes[0].mean.abs();
        let fine = probes[1].mean.abs();
        assert!(
            fine < coarse,
            "degenerate family did not decay: {coarse} -> {fine}"
        );
        assert!(coarse > 0.0);
    }
}
