//! Gridded spectra: storage form, monotone interpolation in log frequency,
//! tail extrapolation, and logarithmic derivatives.

use crate::error::{KweError, Result};
use crate::grid::FrequencyGrid;
use crate::numerics::{hermite, fit_line, monotone_slopes};
use crate::params::ModelParams;

/// Which quantity the nodal values represent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralForm {
    /// Occupation spectrum `n(omega)`.
    Occupation,
    /// Rescaled spectrum `N(omega) = omega^(2 beta + 3/2) n(omega)`, the
    /// variable in which the collision operator has its cleanest form.
    Rescaled,
}

impl SpectralForm {
    pub fn as_str(self) -> &'static str {
        match self {
            SpectralForm::Occupation => "n",
            SpectralForm::Rescaled => "N",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "n" | "occupation" => Ok(SpectralForm::Occupation),
            "N" | "rescaled" => Ok(SpectralForm::Rescaled),
            other => Err(KweError::Invalid(format!(
                "unknown spectral form {other:?} (expected \"n\" or \"N\")"
            ))),
        }
    }
}

/// How to evaluate the spectrum outside the grid span.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extrapolation {
    /// Freeze the boundary value.
    Constant,
    /// Fit `ln(value)` against `ln(omega)` over the eight boundary nodes and
    /// continue the fitted power law.  Falls back to a frozen boundary value
    /// when any of those nodes vanishes.
    PowerLawFit,
}

impl Extrapolation {
    pub fn as_str(self) -> &'static str {
        match self {
            Extrapolation::Constant => "constant",
            Extrapolation::PowerLawFit => "power-law-fit",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(Extrapolation::Constant),
            "power-law-fit" => Ok(Extrapolation::PowerLawFit),
            other => Err(KweError::Invalid(format!(
                "unknown extrapolation rule {other:?} (expected \"constant\" or \"power-law-fit\")"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Tail {
    Constant(f64),
    Power { ln_c: f64, slope: f64 },
}

impl Tail {
    fn eval(self, omega: f64) -> f64 {
        match self {
            Tail::Constant(v) => v,
            Tail::Power { ln_c, slope } => (ln_c + slope * omega.ln()).exp(),
        }
    }
}

/// Number of boundary nodes used by the power-law tail fit.
const TAIL_FIT_NODES: usize = 8;

/// Relative node-snapping window for `sample`: a query within this fraction
/// of a grid spacing of a node returns the stored nodal value bit-for-bit.
const SNAP_TOL: f64 = 1e-9;

/// A nonnegative spectrum tabulated on a log-uniform grid.
#[derive(Debug, Clone)]
pub struct SpectrumField {
    grid: FrequencyGrid,
    values: Vec<f64>,
    form: SpectralForm,
    extrapolation: Extrapolation,
    slopes: Vec<f64>,
    tail_lo: Tail,
    tail_hi: Tail,
}

impl SpectrumField {
    /// Wrap nodal values.  Values must be finite and nonnegative.
    pub fn new(
        grid: FrequencyGrid,
        values: Vec<f64>,
        form: SpectralForm,
        extrapolation: Extrapolation,
    ) -> Result<Self> {
        assert_eq!(values.len(), grid.len(), "value/grid length mismatch");
        for (j, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(KweError::NonFinite { node: j });
            }
            if v < 0.0 {
                return Err(KweError::Domain(format!(
                    "spectrum values must be nonnegative, got {v} at node {j}"
                )));
            }
        }
        let slopes = monotone_slopes(grid.log_step(), &values);
        let n = values.len();
        let tail_lo = fit_tail(extrapolation, &grid, &values, 0..TAIL_FIT_NODES, values[0]);
        let tail_hi = fit_tail(
            extrapolation,
            &grid,
            &values,
            n - TAIL_FIT_NODES..n,
            values[n - 1],
        );
        Ok(Self {
            grid,
            values,
            form,
            extrapolation,
            slopes,
            tail_lo,
            tail_hi,
        })
    }

    /// Tabulate a closed-form profile on a grid.
    pub fn tabulate(
        grid: FrequencyGrid,
        form: SpectralForm,
        extrapolation: Extrapolation,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let values: Vec<f64> = grid.nodes().iter().map(|&w| f(w)).collect();
        Self::new(grid, values, form, extrapolation)
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn form(&self) -> SpectralForm {
        self.form
    }

    pub fn extrapolation(&self) -> Extrapolation {
        self.extrapolation
    }

    /// Evaluate at any positive frequency: nodal snap, monotone cubic in
    /// `ln(omega)` inside the span, tail extrapolation outside.
    pub fn sample(&self, omega: f64) -> Result<f64> {
        if !omega.is_finite() || omega <= 0.0 {
            return Err(KweError::Domain(format!(
                "spectrum sampled at non-positive frequency {omega}"
            )));
        }
        let n = self.values.len();
        let pos = self.grid.position(omega);
        let nearest = pos.round();
        if (pos - nearest).abs() < SNAP_TOL && nearest >= 0.0 && nearest < n as f64 {
            return Ok(self.values[nearest as usize]);
        }
        if pos < 0.0 {
            return Ok(self.tail_lo.eval(omega));
        }
        if pos > (n - 1) as f64 {
            return Ok(self.tail_hi.eval(omega));
        }
        let j = (pos.floor() as usize).min(n - 2);
        let t = pos - j as f64;
        Ok(hermite(
            self.values[j],
            self.values[j + 1],
            self.slopes[j],
            self.slopes[j + 1],
            self.grid.log_step(),
            t,
        ))
    }

    /// True when `omega` lies outside the grid span (tail extrapolation
    /// territory, excluding the snap window at the boundary nodes).
    pub fn is_extrapolated(&self, omega: f64) -> bool {
        let pos = self.grid.position(omega);
        let nearest = pos.round();
        if (pos - nearest).abs() < SNAP_TOL
            && nearest >= 0.0
            && nearest < self.values.len() as f64
        {
            return false;
        }
        pos < 0.0 || pos > (self.values.len() - 1) as f64
    }

    /// Convert between the occupation and rescaled forms by the pointwise
    /// factor `omega^(2 beta + 3/2)`.
    pub fn convert_form(&self, params: &ModelParams, target: SpectralForm) -> Result<Self> {
        if self.form == target {
            return Ok(self.clone());
        }
        let g = params.gamma_scale();
        let exponent = match target {
            SpectralForm::Rescaled => g,
            SpectralForm::Occupation => -g,
        };
        let values: Vec<f64> = self
            .grid
            .nodes()
            .iter()
            .zip(&self.values)
            .map(|(&w, &v)| v * w.powf(exponent))
            .collect();
        Self::new(self.grid.clone(), values, target, self.extrapolation)
    }

    /// Logarithmic derivative `d(value)/d(ln omega)` at the nodes, via
    /// fourth-order finite differences (one-sided near the boundary).
    pub fn log_derivative(&self) -> GridFunction {
        GridFunction {
            values: log_derivative_values(self.grid.log_step(), &self.values),
            grid: self.grid.clone(),
        }
    }
}

fn fit_tail(
    extrapolation: Extrapolation,
    grid: &FrequencyGrid,
    values: &[f64],
    range: std::ops::Range<usize>,
    boundary: f64,
) -> Tail {
    match extrapolation {
        Extrapolation::Constant => Tail::Constant(boundary),
        Extrapolation::PowerLawFit => {
            if range.clone().any(|j| values[j] <= 0.0) {
                return Tail::Constant(boundary);
            }
            let xs: Vec<f64> = range.clone().map(|j| grid.omega(j).ln()).collect();
            let ys: Vec<f64> = range.map(|j| values[j].ln()).collect();
            let (slope, ln_c) = fit_line(&xs, &ys);
            Tail::Power { ln_c, slope }
        }
    }
}

fn log_derivative_values(h: f64, f: &[f64]) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 5, "derivative stencil needs at least five nodes");
    let mut d = vec![0.0; n];
    d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h);
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h);
    for j in 2..n - 2 {
        d[j] = (f[j - 2] - 8.0 * f[j - 1] + 8.0 * f[j + 1] - f[j + 2]) / (12.0 * h);
    }
    d[n - 2] =
        (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5])
            / (12.0 * h);
    d[n - 1] =
        (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] + 3.0 * f[n - 5])
            / (12.0 * h);
    d
}

/// A signed nodal function on a frequency grid (derivatives, collision
/// values, residuals).
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: FrequencyGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: FrequencyGrid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len(), "value/grid length mismatch");
        Self { grid, values }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    /// `L^p(d omega)` norm over the grid span with trapezoid weights.
    pub fn lp_norm(&self, p: f64) -> f64 {
        assert!(p >= 1.0, "L^p norm needs p >= 1");
        let mut acc = 0.0;
        for (j, &v) in self.values.iter().enumerate() {
            acc += self.grid.weight(j) * v.abs().powf(p);
        }
        acc.powf(1.0 / p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tol;

    fn grid(n: usize) -> FrequencyGrid {
        FrequencyGrid::log_uniform(1e-2, 1e2, n).unwrap()
    }

    fn power_field(n: usize, s: f64, extrap: Extrapolation) -> SpectrumField {
        SpectrumField::tabulate(grid(n), SpectralForm::Occupation, extrap, |w| w.powf(s))
            .unwrap()
    }

    #[test]
    fn rejects_negative_and_non_finite_values() {
        let g = grid(16);
        let mut v = vec![1.0; 16];
        v[3] = -1e-30;
        assert!(SpectrumField::new(g.clone(), v, SpectralForm::Occupation, Extrapolation::Constant).is_err());
        let mut v = vec![1.0; 16];
        v[5] = f64::NAN;
        assert!(matches!(
            SpectrumField::new(g, v, SpectralForm::Occupation, Extrapolation::Constant),
            Err(KweError::NonFinite { node: 5 })
        ));
    }

    #[test]
    fn sample_snaps_to_nodes() {
        let f = power_field(64, -1.3, Extrapolation::Constant);
        for j in [0, 17, 63] {
            let w = f.grid().omega(j);
            assert_eq!(f.sample(w * (1.0 + 1e-13)).unwrap(), f.values()[j]);
        }
    }

    #[test]
    fn sample_rejects_nonpositive_frequency() {
        let f = power_field(16, 0.0, Extrapolation::Constant);
        assert!(f.sample(0.0).is_err());
        assert!(f.sample(-1.0).is_err());
        assert!(f.sample(f64::NAN).is_err());
    }

    #[test]
    fn midpoint_sampling_is_accurate_on_smooth_data() {
        let f = power_field(256, 0.7, Extrapolation::Constant);
        let mut worst = 0.0f64;
        for j in 0..255 {
            let w = (f.grid().omega(j) * f.grid().omega(j + 1)).sqrt();
            let exact = w.powf(0.7);
            worst = worst.max((f.sample(w).unwrap() - exact).abs() / exact);
        }
        assert!(worst < tol::SAMPLE_MIDPOINT_REL, "worst rel error {worst}");
    }

    #[test]
    fn interpolation_preserves_nonnegativity() {
        // Data with a hard zero plateau: the monotone interpolant must not
        // undershoot below zero anywhere.
        let g = grid(32);
        let values: Vec<f64> = (0..32)
            .map(|j| if (10..=20).contains(&j) { 0.0 } else { 1.0 + j as f64 })
            .collect();
        let f = SpectrumField::new(g, values, SpectralForm::Occupation, Extrapolation::Constant)
            .unwrap();
        for k in 0..1000 {
            let w = f.grid().omega_min()
                * ((k as f64 / 999.0) * (f.grid().omega_max() / f.grid().omega_min()).ln()).exp();
            assert!(f.sample(w).unwrap() >= 0.0);
        }
    }

    #[test]
    fn power_law_tails_are_exact_on_pure_powers() {
        let f = power_field(128, -1.5, Extrapolation::PowerLawFit);
        for &w in &[1e-4, 1e-3, 1e3, 1e4] {
            let exact = f64::powf(w, -1.5);
            let got = f.sample(w).unwrap();
            assert!(
                ((got - exact) / exact).abs() < 1e-10,
                "tail at {w}: {got} vs {exact}"
            );
        }
    }

    #[test]
    fn constant_tails_freeze_boundary_values() {
        let f = power_field(64, -1.5, Extrapolation::Constant);
        assert_eq!(f.sample(1e-5).unwrap(), f.values()[0]);
        assert_eq!(f.sample(1e5).unwrap(), f.values()[63]);
    }

    #[test]
    fn power_law_fit_falls_back_on_zeros() {
        let g = grid(16);
        let mut v = vec![2.0; 16];
        v[0] = 0.0;
        v[15] = 0.0;
        let f = SpectrumField::new(g, v, SpectralForm::Occupation, Extrapolation::PowerLawFit)
            .unwrap();
        assert_eq!(f.sample(1e-4).unwrap(), 0.0);
        assert_eq!(f.sample(1e4).unwrap(), 0.0);
    }

    #[test]
    fn form_conversion_roundtrips() {
        let params = ModelParams::new(0.25, 2, 0.0).unwrap();
        let f = power_field(64, -0.8, Extrapolation::Constant);
        let n2 = f
            .convert_form(&params, SpectralForm::Rescaled)
            .unwrap()
            .convert_form(&params, SpectralForm::Occupation)
            .unwrap();
        assert_eq!(n2.form(), SpectralForm::Occupation);
        for (a, b) in f.values().iter().zip(n2.values()) {
            assert!(((a - b) / a).abs() < 1e-14);
        }
        // Rescaled values carry the omega^(2 beta + 3/2) factor.
        let r = f.convert_form(&params, SpectralForm::Rescaled).unwrap();
        let w = f.grid().omega(10);
        let expect = f.values()[10] * w.powf(2.0);
        assert!(((r.values()[10] - expect) / expect).abs() < 1e-14);
    }

    #[test]
    fn log_derivative_matches_power_law_slope() {
        let g = FrequencyGrid::log_uniform(1e-2, 1e2, 512).unwrap();
        let f = SpectrumField::tabulate(g, SpectralForm::Occupation, Extrapolation::Constant, |w| {
            w.powf(0.7)
        })
        .unwrap();
        let d = f.log_derivative();
        let mut worst = 0.0f64;
        for (j, &dv) in d.values().iter().enumerate() {
            let exact = 0.7 * f.grid().omega(j).powf(0.7);
            worst = worst.max(((dv - exact) / exact).abs());
        }
        assert!(worst < tol::LOG_DERIVATIVE_POWER_REL, "worst rel error {worst}");
    }

    #[test]
    fn grid_function_norms() {
        let g = FrequencyGrid::log_uniform(1.0, std::f64::consts::E, 2048).unwrap();
        // |v| = 1/omega: sup = 1 at omega = 1, L^1 = int 1/omega = 1.
        let vals: Vec<f64> = g.nodes().iter().map(|&w| -1.0 / w).collect();
        let gf = GridFunction::new(g, vals);
        assert!((gf.sup_norm() - 1.0).abs() < 1e-14);
        assert!((gf.lp_norm(1.0) - 1.0).abs() < 1e-9);
    }
}
