use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {dim} exceeds the configured limit {limit}")]
    DimensionLimit { dim: usize, limit: usize },

    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),

    #[error("operator is not Hermitian (max |A - A^dag| = {0:.3e})")]
    NotHermitian(f64),

    #[error("psd violation: min eigenvalue {0:.3e}")]
    NotPsd(f64),

    #[error("trace violation: trace = {0:.12}")]
    Trace(f64),

    #[error("effect bound violated: spectrum spans [{min:.3e}, {max:.3e}]")]
    EffectBound { min: f64, max: f64 },

    #[error("subsystem index {0} out of range")]
    IndexOutOfRange(usize),

    #[error("invalid subsystem dims: {0}")]
    InvalidDims(String),

    #[error("wire {wire} out of range for a circuit with {wires} wires")]
    WireOutOfRange { wire: usize, wires: usize },

    #[error("gate is not unitary (max |U^dag U - I| = {0:.3e})")]
    NotUnitary(f64),

    #[error("ancilla count {ancillas} exceeds gate count {gates}")]
    TooManyAncillas { ancillas: usize, gates: usize },

    #[error("enumeration of {count:.3e} effects exceeds cap {cap:.3e}")]
    EnumerationTooLarge { count: f64, cap: f64 },

    #[error("lookup table is not total: {0}")]
    TableNotTotal(String),

    #[error("type-class count {count:.3e} exceeds cap {cap:.3e}")]
    TypeClassCap { count: f64, cap: f64 },

    #[error("guarantee undefined: {0}")]
    GuaranteeUndefined(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("infeasible at budget: {0}")]
    Infeasible(String),

    #[error("iteration limit exceeded after {iterations} iterations (best feasible eta {best_eta})")]
    IterationsExceeded { iterations: usize, best_eta: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("input error in {path}: {message}")]
    Input { path: String, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
