//! Error types shared across the crate.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    /// Mathematical domain violation (non-finite input, t <= 0 where a
    /// kernel is evaluated, coordinates outside [0, lambda], ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// API misuse: out-of-range indices, empty inputs, mismatched grids.
    #[error("usage error: {0}")]
    Usage(String),

    /// A documented contract was violated by the caller's data
    /// (e.g. nonzero Dirichlet boundary values fed to the H-norm).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Explicit scheme stability bound violated; the solver refuses to run.
    #[error("stability violation: {0}")]
    Stability(String),

    /// Picard iteration did not reach the tolerance within the iteration
    /// budget. The difference sequence is attached so the failure is
    /// diagnosable; it is never silently swallowed.
    #[error("Picard iteration failed to converge after {iterations} iterations (last diff {last_diff:e}); differences: {diffs:?}")]
    NonConvergence {
        iterations: usize,
        last_diff: f64,
        diffs: Vec<f64>,
    },

    /// A solver/operation precondition does not hold for the supplied data.
    #[error("precondition violation: {0}")]
    Precondition(String),

    /// Configuration parse or validation failure. All validation problems
    /// found are listed, not only the first.
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed binary dump: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
