use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix must be square and non-empty, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("symmetric eigensolver did not converge within {sweeps} sweeps")]
    EigenNoConvergence { sweeps: usize },

    #[error("matrix exponential lost orthogonality: |U^T U - I| = {residual:e}")]
    ExpmNotOrthogonal { residual: f64 },

    #[error("purification basin violated: {0}")]
    PurificationBasin(String),

    #[error("purification did not reach tolerance {tol:e} within {max_iter} iterations (residual {residual:e})")]
    PurificationNoConvergence { tol: f64, max_iter: usize, residual: f64 },

    #[error("overlap matrix is not positive definite: eigenvalue {eigenvalue:e}")]
    NotPositiveDefinite { eigenvalue: f64 },

    #[error("not a density matrix: {0}")]
    NotDensityMatrix(String),

    #[error("not a tangent vector: {0}")]
    NotTangent(String),

    #[error("tangent vector is anchored at a different base point")]
    WrongBasePoint,

    #[error("degenerate frontier: eigenvalues {lower} and {upper} at the occupation cut are tied")]
    DegenerateFrontier { lower: f64, upper: f64 },

    #[error("invalid occupation: {0}")]
    InvalidOccupation(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("zero gradient at the probe point; choose a different starting density")]
    ZeroGradient,

    #[error("line search failed after {halvings} step reductions at iteration {iteration}")]
    LineSearchFailed { iteration: usize, halvings: usize },

    #[error("non-finite energy at iteration {0}")]
    NonFiniteEnergy(usize),

    #[error("insufficient decay data: {usable} usable points, need at least {required}")]
    InsufficientData { usable: usize, required: usize },

    #[error("stored iterates are required but were not recorded")]
    MissingIterates,

    #[error("level shift search exhausted: {}", format_attempts(.attempts))]
    ShiftSearchExhausted { attempts: Vec<(f64, String)> },

    #[error("runs did not converge for shifts {0:?}")]
    NotConverged(Vec<f64>),

    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },

    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },

    #[error("JSON error: {0}")]
    Json(String),
}

fn format_attempts(attempts: &[(f64, String)]) -> String {
    attempts
        .iter()
        .map(|(b, s)| format!("b={b}: {s}"))
        .collect::<Vec<_>>()
        .join(", ")
}
