use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid subsystem `{label}`: {reason}")]
    InvalidSubsystem { label: String, reason: String },

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("states live in different Hilbert spaces")]
    SpaceMismatch,

    #[error("cannot normalize a vector with norm {0:e}")]
    ZeroNorm(f64),

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("bad subsystem index: {0}")]
    IndexError(String),

    #[error("pulse would leak {leaked:e} probability past the top Fock level of mode {mode}")]
    TruncationLeakage { mode: usize, leaked: f64 },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("Taylor series did not converge after {0} terms")]
    NoConvergence(usize),

    #[error("outcome branch has probability {probability:e} on atom {atom}")]
    ZeroProbabilityBranch { atom: usize, probability: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("fidelity formula is degenerate at theta2 = {0}")]
    DegenerateAngle(f64),

    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("coupling rate must be positive, got {0}")]
    NonPositiveCoupling(f64),
}
