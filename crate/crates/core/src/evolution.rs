//! Time integration of the kinetic equation: classical fourth-order
//! Runge-Kutta steps with step-doubling error control, a cubic stability
//! cap on the step size, and hard positivity safeguards.  Every accepted
//! step carries a full diagnostics record so conservation and regularity
//! can be audited offline.

use crate::collision::{collide_grid, EvaluatorKind};
use crate::diagnostics;
use crate::error::{KweError, Result};
use crate::field::SpectrumField;
use crate::params::ModelParams;
use crate::resonance::ResonanceQuad;
use crate::tol;

/// Hard cap on accepted plus rejected steps in one `integrate` call; beyond
/// this the run is reported as unresolvable rather than looping forever.
const MAX_STEPS: usize = 200_000;

/// Relative slack used when deciding that a step boundary has reached a
/// snapshot time or the horizon.
const TIME_SNAP: f64 = 1e-12;

/// Step-size policy of the adaptive integrator.  Setting
/// `dt_min == dt_max` selects fixed-step mode: no step doubling, no error
/// control, every step either succeeds or ends the run.
#[derive(Debug, Clone)]
pub struct StepController {
    /// First attempted step size.
    pub dt_init: f64,
    /// Safety factor of the cubic stability cap
    /// `dt <= safety / (sup N (sup N + sup DN))`.
    pub safety: f64,
    /// Smallest admissible step; needing less is treated as blow-up.
    pub dt_min: f64,
    /// Largest admissible step.
    pub dt_max: f64,
    /// Values below this floor at any stage reject the step.
    pub positivity_floor: f64,
    /// Target for the step-doubling error estimate (sup norm, relative).
    pub tol_rk: f64,
}

impl Default for StepController {
    fn default() -> Self {
        Self {
            dt_init: 0.01,
            safety: 0.25,
            dt_min: 1e-7,
            dt_max: 0.25,
            positivity_floor: 0.0,
            tol_rk: 1e-6,
        }
    }
}

impl StepController {
    pub fn validate(&self) -> Result<()> {
        let all_finite = self.dt_init.is_finite()
            && self.safety.is_finite()
            && self.dt_min.is_finite()
            && self.dt_max.is_finite()
            && self.positivity_floor.is_finite()
            && self.tol_rk.is_finite();
        if !all_finite {
            return Err(KweError::Invalid("controller fields must be finite".into()));
        }
        if self.dt_init <= 0.0 || self.dt_min <= 0.0 || self.dt_max <= 0.0 {
            return Err(KweError::Invalid("step sizes must be positive".into()));
        }
        if self.dt_min > self.dt_max {
            return Err(KweError::Invalid(format!(
                "dt_min = {} exceeds dt_max = {}",
                self.dt_min, self.dt_max
            )));
        }
        if self.safety <= 0.0 || self.tol_rk <= 0.0 {
            return Err(KweError::Invalid(
                "safety factor and error tolerance must be positive".into(),
            ));
        }
        if self.positivity_floor < 0.0 {
            return Err(KweError::Invalid("positivity floor must be >= 0".into()));
        }
        Ok(())
    }

    /// Fixed-step mode: single steps of exactly `dt_min == dt_max`.
    pub fn is_fixed_step(&self) -> bool {
        self.dt_min == self.dt_max
    }
}

/// Snapshot of the audit quantities of one state.  `entropy` is NaN when
/// the occupation vanishes somewhere, and `seminorm` is NaN when the
/// dispersion exponent lies outside the band where the smoothing seminorm
/// is defined; both stay well-defined on every admissible run.
#[derive(Debug, Clone)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub entropy: f64,
    pub min_value: f64,
    pub max_value: f64,
    pub sup_dn: f64,
    pub lp_dn: f64,
    pub seminorm: f64,
    pub regularity: f64,
}

impl DiagnosticsRecord {
    pub fn compute(t: f64, field: &SpectrumField, params: &ModelParams) -> Result<Self> {
        let mass = diagnostics::mass(field, params)?;
        let energy = diagnostics::energy(field, params)?;
        let entropy = match diagnostics::entropy(field, params) {
            Ok(s) => s,
            Err(KweError::NonPositiveValue { .. }) => f64::NAN,
            Err(e) => return Err(e),
        };
        let rescaled = field.convert_form(params, crate::field::SpectralForm::Rescaled)?;
        let min_value = rescaled.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let max_value = rescaled.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let dn = rescaled.log_derivative();
        let sup_dn = dn.sup_norm();
        let lp_dn = dn.lp_norm(2.0 * params.p0() as f64);
        let seminorm = match diagnostics::smoothing_seminorm(&dn, params.beta()) {
            Ok(s) => s,
            Err(KweError::Domain(_)) => f64::NAN,
            Err(e) => return Err(e),
        };
        let sup_n = rescaled.values().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        Ok(Self {
            t,
            mass,
            energy,
            entropy,
            min_value,
            max_value,
            sup_dn,
            lp_dn,
            seminorm,
            regularity: sup_n + lp_dn + sup_dn,
        })
    }
}

/// One accepted step: the time reached, the step that reached it, the
/// fraction of collision mass drawn from beyond the grid span during the
/// step's right-hand-side evaluations, and the diagnostics of the new state.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub t: f64,
    pub dt: f64,
    pub extrapolated_fraction: f64,
    pub diagnostics: DiagnosticsRecord,
}

/// How an integration ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryStatus {
    /// The horizon was reached.
    Completed,
    /// The step size collapsed below `dt_min` (or a fixed step failed):
    /// the data are leaving the regime the integrator can represent.
    BlowUpSuspected,
}

/// Full output of one integration run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Times of the captured snapshots (always includes 0 and, on a
    /// completed run, the horizon).
    pub times: Vec<f64>,
    pub snapshots: Vec<SpectrumField>,
    /// Per-step audit trail; the first entry records the initial state
    /// with `dt = 0`.
    pub steps: Vec<StepRecord>,
    pub accepted: usize,
    pub rejected_error: usize,
    pub rejected_positivity: usize,
    pub status: TrajectoryStatus,
    /// Worst per-step extrapolated collision-mass fraction seen on the run.
    pub extrapolated_fraction: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &SpectrumField {
        self.snapshots.last().expect("trajectory holds >= 1 snapshot")
    }

    pub fn final_record(&self) -> &DiagnosticsRecord {
        &self.steps.last().expect("trajectory holds >= 1 step").diagnostics
    }
}

/// One classical four-stage step from `field`, checking every stage and
/// the combined update against the positivity floor.  Returns the advanced
/// field and the worst extrapolated collision fraction among the stages.
pub fn step_rk4(
    field: &SpectrumField,
    dt: f64,
    quad: &ResonanceQuad,
    evaluator: EvaluatorKind,
    floor: f64,
) -> Result<(SpectrumField, f64)> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(KweError::Domain(format!(
            "step size must be positive, got {dt}"
        )));
    }
    let k1 = collide_grid(field, quad, evaluator)?;
    let (next, fraction) = rk4_advance(field, dt, &k1.values, quad, evaluator, floor)?;
    Ok((next, fraction.max(k1.extrapolated_fraction)))
}

/// Advance `field` by one classical RK4 step of size `dt`, reusing the
/// already-computed right-hand side `k1` at the initial state.  Every
/// internal stage and the combined update are checked for finiteness and
/// against the positivity floor before being accepted.
fn rk4_advance(
    field: &SpectrumField,
    dt: f64,
    k1: &[f64],
    quad: &ResonanceQuad,
    evaluator: EvaluatorKind,
    floor: f64,
) -> Result<(SpectrumField, f64)> {
    let y = field.values();
    let n = y.len();
    let stage_state = |k: &[f64], c: f64, stage: usize| -> Result<SpectrumField> {
        let mut vals = Vec::with_capacity(n);
        for j in 0..n {
            let v = y[j] + c * k[j];
            if !v.is_finite() {
                return Err(KweError::NonFinite { node: j });
            }
            if v < floor {
                return Err(KweError::PositivityViolation { node: j, stage });
            }
            vals.push(v);
        }
        SpectrumField::new(
            field.grid().clone(),
            vals,
            field.form(),
            field.extrapolation(),
        )
    };

    let y2 = stage_state(k1, 0.5 * dt, 1)?;
    let k2 = collide_grid(&y2, quad, evaluator)?;
    let y3 = stage_state(&k2.values, 0.5 * dt, 2)?;
    let k3 = collide_grid(&y3, quad, evaluator)?;
    let y4 = stage_state(&k3.values, dt, 3)?;
    let k4 = collide_grid(&y4, quad, evaluator)?;

    let sixth = dt / 6.0;
    let mut vals = Vec::with_capacity(n);
    for j in 0..n {
        let v = y[j] + sixth * (k1[j] + 2.0 * k2.values[j] + 2.0 * k3.values[j] + k4.values[j]);
        if !v.is_finite() {
            return Err(KweError::NonFinite { node: j });
        }
        if v < floor {
            return Err(KweError::PositivityViolation { node: j, stage: 5 });
        }
        vals.push(v);
    }
    let next = SpectrumField::new(
        field.grid().clone(),
        vals,
        field.form(),
        field.extrapolation(),
    )?;
    let fraction = k2
        .extrapolated_fraction
        .max(k3.extrapolated_fraction)
        .max(k4.extrapolated_fraction);
    Ok((next, fraction))
}

fn sup_abs_diff(a: &SpectrumField, b: &SpectrumField) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .fold(0.0f64, |m, (&x, &y)| m.max((x - y).abs()))
}

fn sup_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
}

/// Is `err` the signature of a rejectable step (as opposed to a structural
/// failure that must abort the run)?
fn is_step_reject(err: &KweError) -> bool {
    matches!(
        err,
        KweError::PositivityViolation { .. } | KweError::NonFinite { .. }
    )
}

/// Integrate the kinetic equation from `field0` to `horizon`.
///
/// Snapshots of the state are captured at `t = 0`, at every requested
/// `snapshot_times` entry (each step is shortened to land on them exactly),
/// and at the horizon.  The quadrature rule carries the frequency-truncation
/// parameter; pass a rule restricted to `eps` to integrate the truncated
/// operator.
pub fn integrate(
    field0: &SpectrumField,
    params: &ModelParams,
    horizon: f64,
    controller: &StepController,
    quad: &ResonanceQuad,
    evaluator: EvaluatorKind,
    snapshot_times: &[f64],
) -> Result<Trajectory> {
    controller.validate()?;
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(KweError::Invalid(format!(
            "horizon must be positive and finite, got {horizon}"
        )));
    }
    let mut targets: Vec<f64> = snapshot_times.to_vec();
    for &s in &targets {
        if !(s.is_finite() && s > 0.0 && s < horizon) {
            return Err(KweError::Invalid(format!(
                "snapshot times must lie strictly inside (0, horizon), got {s}"
            )));
        }
    }
    targets.sort_by(|a, b| a.partial_cmp(b).expect("finite snapshot times"));
    targets.dedup();
    targets.push(horizon);

    let fixed = controller.is_fixed_step();
    let floor = controller.positivity_floor;
    let mut field = field0.clone();
    let mut t = 0.0f64;
    let mut dt_next = controller.dt_init.clamp(controller.dt_min, controller.dt_max);
    let mut next_target = 0usize;

    let mut trajectory = Trajectory {
        times: vec![0.0],
        snapshots: vec![field.clone()],
        steps: vec![StepRecord {
            t: 0.0,
            dt: 0.0,
            extrapolated_fraction: 0.0,
            diagnostics: DiagnosticsRecord::compute(0.0, &field, params)?,
        }],
        accepted: 0,
        rejected_error: 0,
        rejected_positivity: 0,
        status: TrajectoryStatus::Completed,
        extrapolated_fraction: 0.0,
    };

    let mut total_attempts = 0usize;
    'time_loop: while horizon - t > TIME_SNAP * horizon {
        // Stability cap from the cubic nonlinearity: the collision rate
        // scales like N^2 (1 + relative slope), so cap dt accordingly.
        let mut dt = dt_next;
        if !fixed {
            let rescaled = field.convert_form(params, crate::field::SpectralForm::Rescaled)?;
            let sup_dn = rescaled.log_derivative().sup_norm();
            let sup_nr = sup_abs(rescaled.values());
            let cap = controller.safety / (sup_nr * (sup_nr + sup_dn) + tol::TINY);
            dt = dt.min(cap).clamp(controller.dt_min, controller.dt_max);
        }
        // Land exactly on the next snapshot time or the horizon.
        let target = targets[next_target];
        dt = dt.min(target - t);

        let k1 = match collide_grid(&field, quad, evaluator) {
            Ok(k) => k,
            Err(e) if is_step_reject(&e) => {
                // The current state itself produces a non-finite rate:
                // no step size can help.
                trajectory.status = TrajectoryStatus::BlowUpSuspected;
                break 'time_loop;
            }
            Err(e) => return Err(e),
        };

        loop {
            total_attempts += 1;
            if total_attempts > MAX_STEPS {
                return Err(KweError::CannotResolve {
                    required: total_attempts,
                    budget: MAX_STEPS,
                });
            }

            if fixed {
                match rk4_advance(&field, dt, &k1.values, quad, evaluator, floor) {
                    Ok((next, frac)) => {
                        let frac = frac.max(k1.extrapolated_fraction);
                        t += dt;
                        field = next;
                        trajectory.accepted += 1;
                        trajectory.extrapolated_fraction =
                            trajectory.extrapolated_fraction.max(frac);
                        trajectory.steps.push(StepRecord {
                            t,
                            dt,
                            extrapolated_fraction: frac,
                            diagnostics: DiagnosticsRecord::compute(t, &field, params)?,
                        });
                        break;
                    }
                    Err(e) if is_step_reject(&e) => {
                        trajectory.rejected_positivity += 1;
                        trajectory.status = TrajectoryStatus::BlowUpSuspected;
                        break 'time_loop;
                    }
                    Err(e) => return Err(e),
                }
            }

            // Adaptive mode: one full step against two half steps.
            let half = 0.5 * dt;
            let attempt = (|| -> Result<(SpectrumField, f64, f64)> {
                let (big, f_big) = rk4_advance(&field, dt, &k1.values, quad, evaluator, floor)?;
                let (mid, f_mid) = rk4_advance(&field, half, &k1.values, quad, evaluator, floor)?;
                let k1_mid = collide_grid(&mid, quad, evaluator)?;
                let (fine, f_fine) =
                    rk4_advance(&mid, half, &k1_mid.values, quad, evaluator, floor)?;
                let err = sup_abs_diff(&big, &fine) / (sup_abs(fine.values()) + tol::TINY);
                let frac = f_big
                    .max(f_mid)
                    .max(f_fine)
                    .max(k1_mid.extrapolated_fraction)
                    .max(k1.extrapolated_fraction);
                Ok((fine, err, frac))
            })();

            match attempt {
                Ok((fine, err, frac)) if err.is_finite() && err <= controller.tol_rk => {
                    t += dt;
                    field = fine;
                    trajectory.accepted += 1;
                    trajectory.extrapolated_fraction = trajectory.extrapolated_fraction.max(frac);
                    trajectory.steps.push(StepRecord {
                        t,
                        dt,
                        extrapolated_fraction: frac,
                        diagnostics: DiagnosticsRecord::compute(t, &field, params)?,
                    });
                    let grow = 0.9 * (controller.tol_rk / err.max(tol::TINY)).powf(0.2);
                    dt_next = (dt * grow.clamp(0.2, 2.0))
                        .clamp(controller.dt_min, controller.dt_max);
                    break;
                }
                Ok((_, err, _)) => {
                    trajectory.rejected_error += 1;
                    let shrink = if err.is_finite() {
                        (0.9 * (controller.tol_rk / err.max(tol::TINY)).powf(0.2)).clamp(0.2, 0.9)
                    } else {
                        0.5
                    };
                    dt *= shrink;
                    if dt < controller.dt_min {
                        trajectory.status = TrajectoryStatus::BlowUpSuspected;
                        break 'time_loop;
                    }
                }
                Err(e) if is_step_reject(&e) => {
                    trajectory.rejected_positivity += 1;
                    dt *= 0.5;
                    if dt < controller.dt_min {
                        trajectory.status = TrajectoryStatus::BlowUpSuspected;
                        break 'time_loop;
                    }
                }
                Err(e) => return Err(e),
            }
        }

        // Snapshot capture: t now sits on `target` up to rounding whenever
        // the step was clipped to reach it.
        if (t - target).abs() <= TIME_SNAP * target.max(1.0) {
            t = target;
            trajectory.times.push(target);
            trajectory.snapshots.push(field.clone());
            next_target += 1;
        }
    }

    if trajectory.status == TrajectoryStatus::BlowUpSuspected
        && trajectory.times.last().copied() != Some(t)
    {
        // Preserve the last admissible state of an aborted run.
        trajectory.times.push(t);
        trajectory.snapshots.push(field.clone());
    }

    Ok(trajectory)
}
