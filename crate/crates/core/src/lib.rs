//! Numerical laboratory for the kinetic wave equation of the MMT model at
//! dispersion exponent 1/2.
//!
//! The central object is the wave-kinetic collision operator for the
//! Majda–McLaughlin–Tabak (MMT) dispersion relation `omega = |k|^{1/2}` with a
//! power-law interaction weight controlled by a single exponent `beta` in
//! (-1, 1).  After reduction of the resonance deltas, the operator becomes a
//! one-dimensional integral over a parameter `u` in [0, 1], which this crate
//! evaluates by several algebraically independent routes (a per-family sum
//! form, a fully symmetrized 16-term form, and a cancellation-free split
//! form), together with a Monte Carlo oracle that integrates the original
//! three-fold collision integral directly.
//!
//! On top of the operator the crate provides explicit adaptive time
//! stepping, conserved-quantity and entropy diagnostics, a fractional
//! smoothing seminorm, weighted sup-norm bounds for the all-signs-positive
//! majorant operator, and concentration-data experiments that measure the
//! L^p growth rate of the operator on near-resonant three-bump data.

pub mod analytic;
pub mod checks;
pub mod collision;
pub mod concentration;
pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod field;
pub mod grid;
pub mod io;
pub mod numerics;
pub mod oracle;
pub mod params;
pub mod resonance;
pub mod tol;

pub use error::{KweError, Result};
pub use field::{Extrapolation, GridFunction, SpectralForm, SpectrumField};
pub use grid::FrequencyGrid;
pub use params::ModelParams;
pub use resonance::ResonanceQuad;
