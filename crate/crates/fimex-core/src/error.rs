//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by coefficient construction, implicit solvers, and the
/// experiment plumbing.
#[derive(Debug, Error)]
pub enum Error {
    /// Node count outside the supported range 2..=9.
    #[error("unsupported node count q={q}; supported range is 2..=9")]
    UnsupportedOrder { q: usize },

    /// Interpolation nodes coincide (or too many were supplied), so the
    /// Vandermonde system is degenerate.
    #[error("degenerate interpolation nodes: {0}")]
    DegenerateInterpolation(String),

    /// Newton iteration failed to reduce the residual below tolerance.
    #[error("Newton divergence{}: {detail}", step_context(.step, .node))]
    NewtonDivergence {
        detail: String,
        step: Option<usize>,
        node: Option<usize>,
    },

    /// A linear system encountered during an implicit solve was singular.
    #[error("linear solve failure: {0}")]
    LinearSolveFailure(String),

    /// The resolvent of an amplification matrix is singular at the queried
    /// point (the point is a pole of the stability function).
    #[error("singular resolvent at z1={z1}")]
    SingularResolvent { z1: num_complex::Complex64 },

    /// Eigenvalue iteration did not converge.
    #[error("eigenvalue computation failed for {rows}x{cols} matrix")]
    EigenFailure { rows: usize, cols: usize },

    /// Invalid caller-supplied argument (dimension mismatch, empty schedule,
    /// non-power-of-two FFT length, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Reference-cache or export I/O failed.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed JSON sidecar or coefficient file.
    #[error("parse error: {0}")]
    Parse(String),
}

fn step_context(step: &Option<usize>, node: &Option<usize>) -> String {
    match (step, node) {
        (Some(s), Some(n)) => format!(" at step {s}, node {n}"),
        (Some(s), None) => format!(" at step {s}"),
        (None, Some(n)) => format!(" at node {n}"),
        (None, None) => String::new(),
    }
}

impl Error {
    /// Attach a macro-step index to solver failures bubbling out of
    /// `integrate`.
    pub(crate) fn with_step(self, step_idx: usize) -> Self {
        match self {
            Error::NewtonDivergence { detail, node, .. } => Error::NewtonDivergence {
                detail,
                step: Some(step_idx),
                node,
            },
            other => other,
        }
    }
}
