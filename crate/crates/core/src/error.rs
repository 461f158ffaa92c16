use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("dimension {dim} exceeds the configured cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("density matrix trace is {trace}, expected 1")]
    BadTrace { trace: f64 },

    #[error("density matrix has negative eigenvalue {eigenvalue:e}")]
    NotPositive { eigenvalue: f64 },

    #[error("operator is not a rank-1 projector")]
    NotRankOneProjector,

    #[error("measurement basis is not complete (max deviation from identity {deviation:e})")]
    IncompleteBasis { deviation: f64 },

    #[error("conditional state for branch `{label}` is undefined (heralding probability {probability:e})")]
    UndefinedConditional { label: String, probability: f64 },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("post-selection orthogonal: epsilon = 1/sqrt(2) makes <eps|+> vanish")]
    PostSelectionOrthogonal,

    #[error("odd cat state is degenerate at eta = 0")]
    DegenerateCat,

    #[error("heralding probability {probability:e} is below the observable floor {floor:e}")]
    Unobservable { probability: f64, floor: f64 },

    #[error("quadrature did not converge: orders {low} and {high} differ by {delta:e}")]
    QuadratureNotConverged { low: usize, high: usize, delta: f64 },
}

pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> Error {
    Error::InvalidParameter { name, value, reason }
}
