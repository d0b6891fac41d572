//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by grid construction, solvers and the run driver.
#[derive(Debug, Error)]
pub enum Error {
    /// One or more configuration keys failed validation. Each entry names the
    /// offending key and the reason.
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    /// A config file could not be parsed at the given line.
    #[error("config parse error at line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },

    /// A field was used with a grid it was not built on.
    #[error("grid mismatch: field built on grid {field_grid:#x}, operation ran on grid {op_grid:#x}")]
    GridMismatch { field_grid: u64, op_grid: u64 },

    /// Kernel family not admissible for the grid dimension.
    #[error("kernel error: {0}")]
    Kernel(String),

    /// Picard iteration failed to reach tolerance within the iteration cap.
    #[error("Picard iteration diverged at step {step}: ratio {last_ratio:.3e} after {iters} iterations")]
    PicardDivergence {
        step: usize,
        iters: usize,
        last_ratio: f64,
    },

    /// A fixed-point iterate left the ball the contraction argument requires.
    #[error("contraction probe iterate escaped the ball: sup-norm {norm:.3e} > radius {radius:.3e} at iteration {iteration}")]
    BallEscape {
        iteration: usize,
        norm: f64,
        radius: f64,
    },

    /// The direct linear solve hit a zero pivot. Assemblies are diagonally
    /// dominant, so this indicates a programming error, not bad user input.
    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    /// Identity evaluators require three states at uniform time spacing.
    #[error("nonuniform time spacing: {0}")]
    NonuniformSpacing(String),

    /// A refinement level failed; carries the level index and the cause.
    #[error("refinement level {level} failed: {source}")]
    RefinementLevel {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    /// An operation required a homogenized (zero-boundary) field.
    #[error("field is not zero on the boundary: max |value| = {0:.3e}")]
    BoundaryNotZero(f64),

    /// The Hardy probe grid must not place a node at the origin.
    #[error("hardy probe: {0}")]
    Hardy(String),

    /// File I/O failure, tagged with the path involved.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
