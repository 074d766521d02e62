//! Logarithmically uniform frequency grids and trapezoid integration in
//! log coordinates.

use crate::error::{KweError, Result};
use crate::numerics::CompensatedSum;

/// Minimum number of grid nodes: anything smaller cannot support the
/// five-point derivative stencils used by the diagnostics.
pub const MIN_NODES: usize = 8;

/// A log-uniform grid of positive frequencies.  Nodes satisfy
/// `omega_j = omega_min * exp(j * log_step)` with the last node pinned
/// exactly to `omega_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    omega: Vec<f64>,
    log_step: f64,
}

impl FrequencyGrid {
    /// Build a log-uniform grid with `count` nodes on `[omega_min, omega_max]`.
    pub fn log_uniform(omega_min: f64, omega_max: f64, count: usize) -> Result<Self> {
        if count < MIN_NODES {
            return Err(KweError::GridTooSmall {
                needed: MIN_NODES,
                got: count,
            });
        }
        if !(omega_min.is_finite() && omega_max.is_finite()) || omega_min <= 0.0 {
            return Err(KweError::Domain(format!(
                "grid bounds must be finite and positive, got [{omega_min}, {omega_max}]"
            )));
        }
        if omega_max <= omega_min {
            return Err(KweError::Domain(format!(
                "grid needs omega_max > omega_min, got [{omega_min}, {omega_max}]"
            )));
        }
        let h = (omega_max.ln() - omega_min.ln()) / (count - 1) as f64;
        let mut omega: Vec<f64> = (0..count)
            .map(|j| omega_min * (j as f64 * h).exp())
            .collect();
        // Pin the endpoint so round trips through files compare exactly.
        omega[count - 1] = omega_max;
        Ok(Self {
            omega,
            log_step: h,
        })
    }

    /// Reconstruct a grid from explicit nodes (e.g. read back from a file),
    /// validating that they are log-uniform.
    pub fn from_nodes(omega: Vec<f64>) -> Result<Self> {
        if omega.len() < MIN_NODES {
            return Err(KweError::GridTooSmall {
                needed: MIN_NODES,
                got: omega.len(),
            });
        }
        for &w in &omega {
            if !w.is_finite() || w <= 0.0 {
                return Err(KweError::Domain(format!(
                    "grid nodes must be finite and positive, got {w}"
                )));
            }
        }
        let n = omega.len();
        let h = (omega[n - 1].ln() - omega[0].ln()) / (n - 1) as f64;
        if h <= 0.0 {
            return Err(KweError::Domain(
                "grid nodes must be strictly increasing".into(),
            ));
        }
        for (j, &w) in omega.iter().enumerate() {
            let expected = omega[0].ln() + j as f64 * h;
            if (w.ln() - expected).abs() > 1e-10 {
                return Err(KweError::Domain(format!(
                    "grid is not log-uniform at node {j}: {w}"
                )));
            }
        }
        Ok(Self {
            omega,
            log_step: h,
        })
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn omega(&self, j: usize) -> f64 {
        self.omega[j]
    }

    pub fn nodes(&self) -> &[f64] {
        &self.omega
    }

    pub fn omega_min(&self) -> f64 {
        self.omega[0]
    }

    pub fn omega_max(&self) -> f64 {
        self.omega[self.omega.len() - 1]
    }

    /// Spacing in `ln(omega)`.
    pub fn log_step(&self) -> f64 {
        self.log_step
    }

    /// Fractional index of `omega` in log coordinates: node `j` maps to `j`.
    pub fn position(&self, omega: f64) -> f64 {
        (omega.ln() - self.omega[0].ln()) / self.log_step
    }

    /// Trapezoid weight for `integrate`, including the `omega` Jacobian of
    /// the log substitution: `d omega = omega d(ln omega)`.
    pub fn weight(&self, j: usize) -> f64 {
        let edge = j == 0 || j == self.omega.len() - 1;
        let base = self.omega[j] * self.log_step;
        if edge {
            0.5 * base
        } else {
            base
        }
    }

    /// Trapezoid-in-log integral of a nodal function over the grid span.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.omega.len(), "value/grid length mismatch");
        let mut acc = CompensatedSum::new();
        for (j, &v) in values.iter().enumerate() {
            acc.add(self.weight(j) * v);
        }
        acc.value()
    }
}
