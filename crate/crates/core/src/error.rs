use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("not a density matrix: {0}")]
    NotDensity(String),

    #[error("unknown gate name `{0}`")]
    UnknownGate(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported control count {0} (supported: 1..=4)")]
    UnsupportedControls(usize),

    #[error("width {width} exceeds the limit of {limit} qubits for {what}")]
    WidthLimit {
        width: usize,
        limit: usize,
        what: &'static str,
    },

    #[error("fault does not match circuit: {0}")]
    FaultMismatch(String),

    #[error("invalid fault `{text}`: {reason}")]
    InvalidFault { text: String, reason: String },

    #[error("invalid test `{0}`")]
    InvalidTest(String),

    #[error("phase signature undefined: {0}")]
    NotPhaseOnly(String),

    #[error("majority vote over empty counts")]
    EmptyCounts,

    #[error("missing expectation for observable `{0}`")]
    MissingObservable(String),

    #[error("operator basis is rank deficient (rank {rank} < {needed})")]
    RankDeficient { rank: usize, needed: usize },

    #[error("unsupported qubit count {0}")]
    UnsupportedQubits(usize),

    #[error("channel is not trace preserving (completeness deviation {0:.3e})")]
    NotTracePreserving(f64),
}
