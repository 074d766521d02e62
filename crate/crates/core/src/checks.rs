//! Named verification suites.
//!
//! Each suite turns one structural property of the implementation into a
//! short list of measurements with pinned tolerances: algebraic identities of
//! the resonant manifold, stationarity of equilibrium spectra, agreement of
//! the independent evaluation routes, scaling covariance, Monte Carlo
//! confirmation of the reduced kernels, and stability of the weighted
//! trilinear bound.  The command-line `verify` experiment renders the
//! results; the acceptance tests reuse several suites directly.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analytic::AnalyticSpectrum;
use crate::collision::{
    collide_point, AnalyticSampler, EvaluatorKind, Sampler,
};
use crate::diagnostics::{
    scaling_covariance_residual, stationarity_residuals, weight_m, weighted_sup_norm,
    WeightedNormSpec,
};
use crate::error::{KweError, Result};
use crate::field::{Extrapolation, SpectralForm, SpectrumField};
use crate::grid::FrequencyGrid;
use crate::oracle::mc_collision;
use crate::params::ModelParams;
use crate::resonance::{self, ResonanceQuad};
use crate::tol;

/// Outcome of one named measurement: `pass` iff `value` is finite and at
/// most `tolerance`.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckResult {
    fn new(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            pass: value.is_finite() && value <= tolerance,
        }
    }
}

/// Registered suite names, in the order `run_all` executes them.
pub const SUITE_NAMES: &[&str] = &[
    "resonance",
    "stationarity",
    "cross-form",
    "scaling",
    "oracle",
    "weighted-bound",
];

/// Run one registered suite.  `seed` feeds the randomized suites
/// (`resonance`, `oracle`, `weighted-bound`); the rest ignore it.
pub fn run_suite(name: &str, seed: u64) -> Result<Vec<CheckResult>> {
    match name {
        "resonance" => resonance_suite(seed),
        "stationarity" => stationarity_suite(),
        "cross-form" => cross_form_suite(),
        "scaling" => scaling_suite(),
        "oracle" => oracle_suite(seed),
        "weighted-bound" => weighted_bound_suite(seed),
        "all" => run_all(seed),
        other => Err(KweError::UnknownSuite(other.to_string())),
    }
}

/// Run every registered suite and concatenate the results.
pub fn run_all(seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for name in SUITE_NAMES {
        out.extend(run_suite(name, seed)?);
    }
    Ok(out)
}

/// Betas spanning the admissible kernel range, used by several suites.
const BETAS: [f64; 3] = [-0.5, 0.0, 0.5];

fn params(beta: f64, eps: f64) -> Result<ModelParams> {
    ModelParams::new(beta, 2, eps)
}

/// The algebraic identities of the resonant manifold, sampled at random
/// resolution parameters spread log-uniformly over twelve decades.
fn resonance_suite(seed: u64) -> Result<Vec<CheckResult>> {
    const DRAWS: usize = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut freq = 0.0f64;
    let mut disp = 0.0f64;
    let mut fam = [0.0f64; 4];
    for _ in 0..DRAWS {
        let u = 10f64.powf(-12.0 * rng.random::<f64>());
        let (r1, r2) = resonance::resonance_residuals(u)?;
        freq = freq.max(r1.abs());
        disp = disp.max(r2.abs());
        for (k, slot) in fam.iter_mut().enumerate() {
            let (l, q) = resonance::family_resonance_residuals(k + 1, u)?;
            *slot = slot.max(l.abs()).max(q.abs());
        }
    }
    let mut out = vec![
        CheckResult::new("resonance-frequency-identity", freq, tol::IDENTITY),
        CheckResult::new("resonance-dispersion-identity", disp, tol::IDENTITY),
    ];
    for (k, &worst) in fam.iter().enumerate() {
        out.push(CheckResult::new(
            format!("resonance-family-{}", k + 1),
            worst,
            tol::IDENTITY,
        ));
    }
    Ok(out)
}

/// Pointwise vanishing of the collision integrand on every equilibrium
/// spectrum `1/(c1 omega + c2)`, across the admissible beta range.
fn stationarity_suite() -> Result<Vec<CheckResult>> {
    let omegas = [0.1, 1.0, 10.0];
    let mut out = Vec::new();
    for &beta in &BETAS {
        let p = params(beta, 0.0)?;
        let quad = ResonanceQuad::build(&p, 3, 10)?;
        for c1 in [0.0, 1.0, 2.0] {
            for c2 in [0.0, 1.0, 2.0] {
                if c1 == 0.0 && c2 == 0.0 {
                    continue;
                }
                let spectrum = AnalyticSpectrum::RayleighJeans { c1, c2 };
                let residuals = stationarity_residuals(&spectrum, &p, &quad, &omegas)?;
                let worst = residuals.iter().fold(0.0f64, |a, &r| a.max(r));
                out.push(CheckResult::new(
                    format!("stationarity[beta={beta},c1={c1},c2={c2}]"),
                    worst,
                    tol::STATIONARITY_RESIDUAL,
                ));
            }
        }
    }
    Ok(out)
}

/// Agreement of the three full evaluation routes on a gridded bump, after
/// converting each to the field's storage form.
fn cross_form_suite() -> Result<Vec<CheckResult>> {
    let routes = [
        EvaluatorKind::Split,
        EvaluatorKind::Symmetric,
        EvaluatorKind::SumForm,
    ];
    let omegas = [0.5, 1.0, 2.0];
    let grid = FrequencyGrid::log_uniform(1e-3, 1e3, 256)?;
    let mut out = Vec::new();
    for &beta in &BETAS {
        // A small spectral cutoff keeps the three routes' treatment of the
        // resolution floor identical without altering the values at the
        // tolerance scale.
        let p = params(beta, 1e-8)?;
        let quad = ResonanceQuad::build(&p, 3, 10)?;
        let field = SpectrumField::tabulate(
            grid.clone(),
            SpectralForm::Rescaled,
            Extrapolation::Constant,
            |w| 1e-4 + (-0.5 * (w.ln() / 0.7).powi(2)).exp(),
        )?;
        let mut worst = 0.0f64;
        for &omega in &omegas {
            let values: Vec<f64> = routes
                .iter()
                .map(|&kind| Ok(collide_point(&field, omega, &quad, kind)?.value))
                .collect::<Result<_>>()?;
            let scale = values.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
            for i in 0..values.len() {
                for j in i + 1..values.len() {
                    worst = worst.max((values[i] - values[j]).abs() / (scale + tol::TINY));
                }
            }
        }
        out.push(CheckResult::new(
            format!("cross-form[beta={beta}]"),
            worst,
            tol::CROSS_FORM_REL,
        ));
    }
    Ok(out)
}

/// Covariance of the operator under frequency dilation on smooth data.
fn scaling_suite() -> Result<Vec<CheckResult>> {
    let spectrum = AnalyticSpectrum::GaussianBumpInLogOmega {
        center: 1.0,
        width: 0.5,
        amplitude: 1.0,
    };
    let mut out = Vec::new();
    for &beta in &BETAS {
        let p = params(beta, 0.0)?;
        let quad = ResonanceQuad::build(&p, 3, 10)?;
        for lambda in [0.5, 2.0] {
            let r = scaling_covariance_residual(&spectrum, lambda, 1.1, &quad)?;
            out.push(CheckResult::new(
                format!("scaling[beta={beta},lambda={lambda}]"),
                r,
                tol::SCALING_RESIDUAL,
            ));
        }
    }
    Ok(out)
}

/// Monte Carlo confirmation of the reduced one-dimensional kernels, in the
/// original two-dimensional coordinates with the dispersion constraint
/// regularized at two window widths.  The reported value is the distance
/// from the quadrature answer in units of the combined allowance
/// (sampling errors plus the empirical regularization bias), so the
/// tolerance is exactly one.
fn oracle_suite(seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p0 = params(0.0, 0.0)?;
    let quad0 = ResonanceQuad::build(&p0, 4, 12)?;
    for bump_idx in 0..5 {
        let spectrum = AnalyticSpectrum::GaussianBumpInLogOmega {
            center: 0.7 + 0.8 * rng.random::<f64>(),
            width: 0.35 + 0.3 * rng.random::<f64>(),
            amplitude: 0.5 + 1.5 * rng.random::<f64>(),
        };
        out.push(oracle_check(
            format!("oracle[bump={bump_idx}]"),
            &spectrum,
            &p0,
            &quad0,
            1e-3,
            250_000,
            seed.wrapping_add(bump_idx),
        )?);
    }
    // The same confrontation at the kernel-range endpoints, with a lighter
    // sampling budget.
    for &beta in &[-0.5, 0.5] {
        let p = params(beta, 0.0)?;
        let quad = ResonanceQuad::build(&p, 4, 12)?;
        let spectrum = AnalyticSpectrum::GaussianBumpInLogOmega {
            center: 1.0,
            width: 0.5,
            amplitude: 1.0,
        };
        out.push(oracle_check(
            format!("oracle[beta={beta}]"),
            &spectrum,
            &p,
            &quad,
            2e-3,
            60_000,
            seed,
        )?);
    }
    Ok(out)
}

fn oracle_check(
    name: String,
    spectrum: &AnalyticSpectrum,
    p: &ModelParams,
    quad: &ResonanceQuad,
    delta: f64,
    samples: u64,
    seed: u64,
) -> Result<CheckResult> {
    let omega = 1.0;
    let sampler = AnalyticSampler::new(spectrum.clone(), p.beta(), SpectralForm::Occupation)?;
    let fast = EvaluatorKind::SumForm
        .instance()
        .eval(&sampler, omega, quad)?
        .value;
    let coarse = mc_collision(spectrum, omega, p, delta, samples, seed)?;
    let fine = mc_collision(spectrum, omega, p, 0.5 * delta, samples, seed)?;
    let bias = (coarse.mean - fine.mean).abs();
    let allowance =
        tol::ORACLE_SIGMA * (coarse.std_error + fine.std_error + bias) + tol::TINY;
    Ok(CheckResult::new(
        name,
        (fine.mean - fast).abs() / allowance,
        1.0,
    ))
}

/// Random modulated power-decay profile saturating the weighted sup ball.
struct ModulatedDecay {
    beta: f64,
    amps: [f64; 4],
    phases: [f64; 4],
}

impl ModulatedDecay {
    fn draw(beta: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut amps = [0.0; 4];
        let mut phases = [0.0; 4];
        for k in 0..4 {
            amps[k] = 0.1 * rng.random::<f64>();
            phases[k] = std::f64::consts::TAU * rng.random::<f64>();
        }
        Self { beta, amps, phases }
    }

    fn profile(&self, omega: f64) -> f64 {
        let lw = omega.ln();
        let mut v = 1.0;
        for k in 0..4 {
            v += self.amps[k] * ((k as f64 + 1.0) * lw + self.phases[k]).cos();
        }
        v
    }
}

impl Sampler for ModulatedDecay {
    fn value(&self, omega: f64) -> Result<f64> {
        Ok(self.profile(omega) / weight_m(omega, self.beta))
    }

    fn form(&self) -> SpectralForm {
        SpectralForm::Occupation
    }

    fn span(&self) -> Option<(f64, f64)> {
        None
    }
}

/// Largest weighted ratio `sup m |C+ f| / (sup m |f|)^3` over one random
/// ensemble of modulated-decay profiles.
fn weighted_ratio_ensemble_max(
    beta: f64,
    quad: &ResonanceQuad,
    omegas: &[f64],
    seed: u64,
) -> Result<f64> {
    let spec = WeightedNormSpec::for_beta(beta);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let field = ModulatedDecay::draw(beta, &mut rng);
        let gain: Vec<f64> = omegas
            .iter()
            .map(|&w| {
                Ok(EvaluatorKind::AllPlus
                    .instance()
                    .eval(&field, w, quad)?
                    .value)
            })
            .collect::<Result<_>>()?;
        let f_vals: Vec<f64> = omegas.iter().map(|&w| field.value(w).unwrap()).collect();
        let num = weighted_sup_norm(omegas, &gain, &spec);
        let den = weighted_sup_norm(omegas, &f_vals, &spec).powi(3);
        let ratio = num / (den + tol::TINY);
        if !ratio.is_finite() {
            return Err(KweError::Invalid(format!(
                "weighted ratio diverged at beta = {beta}"
            )));
        }
        worst = worst.max(ratio);
    }
    Ok(worst)
}

/// Stability of the weighted trilinear bound: the largest gain-to-cube
/// ratio over a random profile ensemble must be finite and move by less
/// than the pinned fraction when the ensemble is redrawn.
fn weighted_bound_suite(seed: u64) -> Result<Vec<CheckResult>> {
    let omegas: Vec<f64> = FrequencyGrid::log_uniform(1e-2, 1e2, 64)?
        .nodes()
        .to_vec();
    let mut out = Vec::new();
    for &beta in &[-0.5, -0.25, 0.0] {
        let p = params(beta, 0.0)?;
        let quad = ResonanceQuad::build(&p, 3, 10)?;
        let a = weighted_ratio_ensemble_max(beta, &quad, &omegas, seed)?;
        let b = weighted_ratio_ensemble_max(beta, &quad, &omegas, seed.wrapping_add(1))?;
        let stability = (a - b).abs() / a.min(b).max(tol::TINY);
        out.push(CheckResult::new(
            format!("weighted-bound[beta={beta}]"),
            stability,
            tol::WEIGHTED_RATIO_STABILITY,
        ));
    }
    Ok(out)
}
