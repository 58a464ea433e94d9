use thiserror::Error;

/// Errors raised by mesh construction, discretization and the spectral solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or argument violates its documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Mesh connectivity or geometry violates a mesh invariant.
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    /// A mesh or config file could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// The shifted operator handed to the factorization was not positive definite.
    #[error("matrix not positive definite: pivot {pivot:.3e} at row {row}")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    /// The iterative eigensolver stopped before all requested pairs converged.
    #[error(
        "eigensolver did not converge after {cycles} cycles (worst residual {worst:.3e}, tolerance {tolerance:.1e})"
    )]
    NoConvergence {
        cycles: usize,
        worst: f64,
        tolerance: f64,
        residuals: Vec<f64>,
    },

    /// Not enough eigenpairs were computed to pass the zero band.
    #[error("index undetermined: largest computed eigenvalue {largest:.4e} does not exceed the zero band {tau_zero:.4e}")]
    IndexUndetermined { largest: f64, tau_zero: f64 },

    /// A closed-form eigenvalue vanishes, so the index jumps at this radius.
    #[error("degenerate radius: eigenvalue level k={level} vanishes")]
    DegenerateRadius { level: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(message: impl Into<String>) -> Error {
    Error::InvalidInput(message.into())
}
