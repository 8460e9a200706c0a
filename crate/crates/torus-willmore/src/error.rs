//! Error types shared across the crate.

use thiserror::Error;

/// Everything that can go wrong in the numerical layer.
#[derive(Debug, Error)]
pub enum Error {
    /// Lattice generators are collinear over ℝ (zero oriented area).
    #[error("invalid lattice: generators are collinear (relative area {rel_area:.3e})")]
    InvalidLattice { rel_area: f64 },

    /// A scalar parameter is outside its documented range.
    #[error("domain error: {0}")]
    Domain(String),

    /// The induced metric lost rank somewhere on the sampling grid.
    #[error("degenerate immersion: EG - F² = {det:.3e} ≤ 0 at grid node ({i}, {j})")]
    DegenerateImmersion { i: usize, j: usize, det: f64 },

    /// Grid sizes of two objects that must share a grid do not match.
    #[error("grid mismatch: expected {expected}, got {got}")]
    GridMismatch { expected: usize, got: usize },

    /// An immersion kind does not support the requested operation.
    #[error("unsupported immersion kind for this operation: {0}")]
    UnsupportedKind(&'static str),

    /// Iterative solver failed to reach its tolerance.
    #[error("numerical failure: {what} did not converge after {iters} iterations (residual {residual:.3e})")]
    SolverDiverged {
        what: &'static str,
        iters: usize,
        residual: f64,
    },

    /// Harmonic-addition of a zero signal.
    #[error("zero amplitude: cannot combine phases of the zero signal")]
    ZeroAmplitude,

    /// The kernel profile is not one-dimensional at this parameter.
    #[error("ambiguous kernel at b = 1: the kernel is two-dimensional beyond phase translation")]
    AmbiguousKernel,

    /// Threshold bisection could not bracket a sign change.
    #[error("bisection bracket failure for the stability threshold: {0}")]
    BracketFailure(String),

    /// Constraint cannot be met within the truncated search space.
    #[error("infeasible constraint at mode cutoff: {0}")]
    Infeasible(String),

    /// A table operation needs more rows than were provided.
    #[error("too few rows: need at least {need}, got {got}")]
    TooFewRows { need: usize, got: usize },

    /// Malformed input file.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
