//! Collision-operator evaluators behind a common strategy interface.
//!
//! Four interchangeable evaluation routes are registered by name:
//!
//! * `split` (default) — rescaled-form evaluator with the near-cancelling
//!   differences computed analytically; accurate down to the quadrature
//!   floor and used by the time integrator.
//! * `symmetric` — rescaled-form double sum, the most literal transcription
//!   of the reduced operator; used as a cross-check.
//! * `sum-form` — occupation-form sum over the four sign families of the
//!   resonant manifold; independent route used for stationarity residuals
//!   and as the deterministic reference for the Monte Carlo oracle.
//! * `all-plus` — the sign-definite majorant operator (every term taken
//!   positively), used for weighted trilinear-bound probes and as the
//!   normalizer of stationarity residuals.
//!
//! All routes share one `ResonanceQuad`, so comparisons between them test
//! algebra and conditioning rather than quadrature differences.

mod all_plus;
mod split;
mod sum_form;
mod symmetric;

pub use all_plus::AllPlusEvaluator;
pub use split::SplitEvaluator;
pub use sum_form::SumFormEvaluator;
pub use symmetric::SymmetricEvaluator;

use rayon::prelude::*;

use crate::analytic::AnalyticSpectrum;
use crate::error::{KweError, Result};
use crate::field::{SpectralForm, SpectrumField};
use crate::resonance::ResonanceQuad;

/// A spectrum that collision evaluators can sample at arbitrary positive
/// frequency.
pub trait Sampler: Sync {
    /// Spectrum value at `omega > 0`, in the form reported by `form`.
    fn value(&self, omega: f64) -> Result<f64>;

    /// Which form `value` returns.
    fn form(&self) -> SpectralForm;

    /// Frequency span outside which values are extrapolated rather than
    /// represented, or `None` when the profile is exact everywhere.
    fn span(&self) -> Option<(f64, f64)>;
}

/// Sampler view of a gridded spectrum.
pub struct FieldSampler<'a> {
    field: &'a SpectrumField,
}

impl<'a> FieldSampler<'a> {
    pub fn new(field: &'a SpectrumField) -> Self {
        Self { field }
    }
}

impl Sampler for FieldSampler<'_> {
    fn value(&self, omega: f64) -> Result<f64> {
        self.field.sample(omega)
    }

    fn form(&self) -> SpectralForm {
        self.field.form()
    }

    fn span(&self) -> Option<(f64, f64)> {
        Some((self.field.grid().omega_min(), self.field.grid().omega_max()))
    }
}

/// Sampler view of a closed-form spectrum, interpreted in a declared form.
pub struct AnalyticSampler {
    spectrum: AnalyticSpectrum,
    beta: f64,
    form: SpectralForm,
}

impl AnalyticSampler {
    pub fn new(spectrum: AnalyticSpectrum, beta: f64, form: SpectralForm) -> Result<Self> {
        Ok(Self {
            spectrum: spectrum.validate()?,
            beta,
            form,
        })
    }
}

impl Sampler for AnalyticSampler {
    fn value(&self, omega: f64) -> Result<f64> {
        Ok(self.spectrum.value(omega, self.beta))
    }

    fn form(&self) -> SpectralForm {
        self.form
    }

    fn span(&self) -> Option<(f64, f64)> {
        None
    }
}

/// View of another sampler with all frequencies multiplied by a fixed
/// factor, used to probe the scaling covariance of the operator.
pub struct ScaledSampler<'a> {
    inner: &'a dyn Sampler,
    lambda: f64,
}

impl<'a> ScaledSampler<'a> {
    pub fn new(inner: &'a dyn Sampler, lambda: f64) -> Self {
        assert!(lambda > 0.0 && lambda.is_finite());
        Self { inner, lambda }
    }
}

impl Sampler for ScaledSampler<'_> {
    fn value(&self, omega: f64) -> Result<f64> {
        self.inner.value(self.lambda * omega)
    }

    fn form(&self) -> SpectralForm {
        self.inner.form()
    }

    fn span(&self) -> Option<(f64, f64)> {
        self.inner
            .span()
            .map(|(lo, hi)| (lo / self.lambda, hi / self.lambda))
    }
}

/// Sample in the target form, converting with the pointwise factor
/// `omega^(2 beta + 3/2)` when the sampler stores the other form.
pub(crate) fn sample_as(
    sampler: &dyn Sampler,
    target: SpectralForm,
    gamma: f64,
    omega: f64,
) -> Result<f64> {
    let v = sampler.value(omega)?;
    if sampler.form() == target {
        Ok(v)
    } else {
        let exponent = match target {
            SpectralForm::Rescaled => gamma,
            SpectralForm::Occupation => -gamma,
        };
        Ok(v * omega.powf(exponent))
    }
}

pub(crate) fn outside_span(span: Option<(f64, f64)>, omega: f64) -> bool {
    match span {
        Some((lo, hi)) => omega < lo || omega > hi,
        None => false,
    }
}

/// Result of one pointwise evaluation.
#[derive(Debug, Clone, Copy)]
pub struct PointEval {
    /// Collision value in the evaluator's native form.
    pub value: f64,
    /// Sign-definite magnitude: the same quadrature with every term taken
    /// positively.  Used to normalize stationarity residuals and to weight
    /// the extrapolation accounting.
    pub gain: f64,
    /// Portion of `gain` contributed by quadrature nodes in proportion to
    /// their share of extrapolated sample arguments.
    pub extrap_mass: f64,
}

impl PointEval {
    /// Fraction of the collision mass at this point that came from
    /// extrapolated samples.
    pub fn extrapolated_fraction(&self) -> f64 {
        if self.gain > 0.0 {
            self.extrap_mass / self.gain
        } else {
            0.0
        }
    }
}

/// One evaluation route for the collision operator.
pub trait CollisionEvaluator: Sync {
    /// Registry name.
    fn name(&self) -> &'static str;

    /// The form of `PointEval::value`: `Rescaled` routes return the
    /// rescaled tendency, `Occupation` routes the occupation tendency.
    fn native_form(&self) -> SpectralForm;

    /// Evaluate at one output frequency.
    fn eval(&self, sampler: &dyn Sampler, omega: f64, quad: &ResonanceQuad)
        -> Result<PointEval>;
}

static SPLIT: SplitEvaluator = SplitEvaluator;
static SYMMETRIC: SymmetricEvaluator = SymmetricEvaluator;
static SUM_FORM: SumFormEvaluator = SumFormEvaluator;
static ALL_PLUS: AllPlusEvaluator = AllPlusEvaluator;

/// Registered evaluation routes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvaluatorKind {
    Split,
    Symmetric,
    SumForm,
    AllPlus,
}

impl Default for EvaluatorKind {
    fn default() -> Self {
        EvaluatorKind::Split
    }
}

impl EvaluatorKind {
    pub fn all() -> [EvaluatorKind; 4] {
        [
            EvaluatorKind::Split,
            EvaluatorKind::Symmetric,
            EvaluatorKind::SumForm,
            EvaluatorKind::AllPlus,
        ]
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "split" => Ok(EvaluatorKind::Split),
            "symmetric" => Ok(EvaluatorKind::Symmetric),
            "sum-form" => Ok(EvaluatorKind::SumForm),
            "all-plus" => Ok(EvaluatorKind::AllPlus),
            other => Err(KweError::UnknownEvaluator(other.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        self.instance().name()
    }

    pub fn instance(self) -> &'static dyn CollisionEvaluator {
        match self {
            EvaluatorKind::Split => &SPLIT,
            EvaluatorKind::Symmetric => &SYMMETRIC,
            EvaluatorKind::SumForm => &SUM_FORM,
            EvaluatorKind::AllPlus => &ALL_PLUS,
        }
    }
}

/// Collision values on a whole grid, reported in the field's own form.
#[derive(Debug, Clone)]
pub struct CollisionResult {
    pub values: Vec<f64>,
    pub evaluator: &'static str,
    /// Aggregate fraction of collision mass from extrapolated samples.
    pub extrapolated_fraction: f64,
}

/// Evaluate at one frequency, converting the value into the field's form.
pub fn collide_point(
    field: &SpectrumField,
    omega: f64,
    quad: &ResonanceQuad,
    kind: EvaluatorKind,
) -> Result<PointEval> {
    let evaluator = kind.instance();
    let sampler = FieldSampler::new(field);
    let mut point = evaluator.eval(&sampler, omega, quad)?;
    let factor = form_factor(evaluator.native_form(), field.form(), quad, omega);
    point.value *= factor;
    point.gain *= factor;
    point.extrap_mass *= factor;
    Ok(point)
}

/// Evaluate at every grid node of `field` in parallel.
pub fn collide_grid(
    field: &SpectrumField,
    quad: &ResonanceQuad,
    kind: EvaluatorKind,
) -> Result<CollisionResult> {
    let evaluator = kind.instance();
    let sampler = FieldSampler::new(field);
    let points: Vec<PointEval> = (0..field.grid().len())
        .into_par_iter()
        .map(|j| {
            let omega = field.grid().omega(j);
            let point = evaluator.eval(&sampler, omega, quad)?;
            if !point.value.is_finite() {
                return Err(KweError::NonFinite { node: j });
            }
            Ok(point)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut total_gain = 0.0;
    let mut total_extrap = 0.0;
    let values = points
        .iter()
        .enumerate()
        .map(|(j, p)| {
            total_gain += p.gain;
            total_extrap += p.extrap_mass;
            p.value * form_factor(evaluator.native_form(), field.form(), quad, field.grid().omega(j))
        })
        .collect();
    let extrapolated_fraction = if total_gain > 0.0 {
        total_extrap / total_gain
    } else {
        0.0
    };
    Ok(CollisionResult {
        values,
        evaluator: evaluator.name(),
        extrapolated_fraction,
    })
}

fn form_factor(
    native: SpectralForm,
    target: SpectralForm,
    quad: &ResonanceQuad,
    omega: f64,
) -> f64 {
    if native == target {
        1.0
    } else {
        let gamma = quad.params().gamma_scale();
        match target {
            SpectralForm::Rescaled => omega.powf(gamma),
            SpectralForm::Occupation => omega.powf(-gamma),
        }
    }
}
