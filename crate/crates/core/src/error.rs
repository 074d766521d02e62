//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide error enum.  Numerical routines are total on their documented
/// domain; everything outside it is reported through one of these variants
/// rather than by panicking or returning poisoned floats.
#[derive(Debug, Error)]
pub enum KweError {
    /// An argument left the mathematical domain of an operation
    /// (e.g. `u` outside `[0, 1]`, `omega <= 0`, `beta` outside `(-1, 1)`).
    #[error("domain error: {0}")]
    Domain(String),

    /// A grid was too small for the requested stencil or construction.
    #[error("grid too small: need at least {needed} nodes, got {got}")]
    GridTooSmall { needed: usize, got: usize },

    /// A computed value became NaN or infinite at the given node.
    #[error("non-finite value produced at node {node}")]
    NonFinite { node: usize },

    /// An explicit time step drove a value below the positivity floor.
    /// `stage` is 1-4 for the internal stages and 5 for the combined update.
    #[error("positivity violated at node {node} in stage {stage}")]
    PositivityViolation { node: usize, stage: usize },

    /// An operation that requires strictly positive data met a nonpositive
    /// value at the given node (e.g. the entropy integrand `log n`).
    #[error("nonpositive value at node {node}")]
    NonPositiveValue { node: usize },

    /// A Monte Carlo estimate was requested for data with empty effective
    /// support.
    #[error("effective support of the spectrum is empty")]
    EmptySupport,

    /// A refinement request exceeded the resolution budget (for example a
    /// concentration width too small for the panel cap).
    #[error("cannot resolve requested scale: would need {required} panels, budget is {budget}")]
    CannotResolve { required: usize, budget: usize },

    /// An evaluator name not present in the registry.
    #[error("unknown collision evaluator: {0}")]
    UnknownEvaluator(String),

    /// A verification suite name not present in the registry.
    #[error("unknown check suite: {0}")]
    UnknownSuite(String),

    /// Malformed input that is not a domain issue (inconsistent lengths,
    /// negative spectra, unparsable files, ...).
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Propagated I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, KweError>;
