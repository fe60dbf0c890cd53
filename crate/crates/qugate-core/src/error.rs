//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by gate construction, analysis, and synthesis.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix size {size} does not equal {d}^{n}")]
    SizeMismatch { size: usize, d: usize, n: usize },

    #[error("matrix is not unitary: max residual {residual:.3e} exceeds tolerance {tol:.1e}")]
    NotUnitary { residual: f64, tol: f64 },

    #[error("matrix entries must be finite")]
    NonFinite,

    #[error("local dimension must be at least 2, got {0}")]
    BadDimension(usize),

    #[error("slot count must be at least 1, got {0}")]
    BadSlotCount(usize),

    #[error("total dimension {dim} exceeds the dense-storage cap {cap}")]
    TooLarge { dim: usize, cap: usize },

    #[error("slot {slot} out of range 1..={n}")]
    SlotOutOfRange { slot: usize, n: usize },

    #[error("slots must be distinct, got ({p},{q})")]
    EqualSlots { p: usize, q: usize },

    #[error("expected a gate on {expected} slot(s), got n={got}")]
    WrongSlotCount { expected: usize, got: usize },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("gate is not primitive: best Schmidt residual {0:.3e}")]
    NotPrimitive(f64),

    #[error("gate is not imprimitive: best Schmidt residual {0:.3e}")]
    NotImprimitive(f64),

    #[error("no product input entangles above the entropy floor {floor:.1e}; best found {best:.3e}")]
    WitnessBelowFloor { best: f64, floor: f64 },

    #[error("generator is not anti-hermitian: residual {0:.3e}")]
    NotAntiHermitian(f64),

    #[error("Lie closure did not stabilize within {0} bracket rounds")]
    ClosureRoundCap(usize),

    #[error("Lie closure admitted more than {0} elements; basis is numerically inconsistent")]
    ClosureDimensionCap(usize),

    #[error("entangler is primitive; it cannot generate circuits for generic targets")]
    PrimitiveEntangler,

    #[error("synthesis did not converge: best cost {best_cost:.3e}")]
    NoConvergence { best_cost: f64 },

    #[error("family member at phi={phi} violates the determinant contract: residual {residual:.3e}")]
    DeterminantContract { phi: f64, residual: f64 },

    #[error("malformed circuit: {0}")]
    MalformedCircuit(String),

    #[error("bad gate spec: {0}")]
    BadSpec(String),

    #[error("linear algebra backend: {0}")]
    Backend(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Backend(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
