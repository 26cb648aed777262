use thiserror::Error;

/// Every failure the solver, the simulator and the CLI can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid phase-type representation: {0}")]
    InvalidPhaseType(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("resolvent (sI - T) is numerically singular at s = {re} + {im}i (condition {condition:e})")]
    SingularResolvent { re: f64, im: f64, condition: f64 },

    #[error("assumption violated: {clause}")]
    AssumptionViolated { clause: String },

    #[error("no root of psi(s) = {target}: {reason}")]
    NoRoot { target: f64, reason: String },

    #[error("roots {first} and {second} are closer than the separation threshold {threshold:e}")]
    RootMultiplicity {
        first: String,
        second: String,
        threshold: f64,
    },

    #[error("expected {expected} roots with negative real part, found {found}")]
    CountMismatch { expected: usize, found: usize },

    #[error("imaginary residue {residue:e} exceeds tolerance in {context}")]
    ImaginaryResidue { residue: f64, context: String },

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error(
        "precision breakdown at stage {stage}, sub-step {substep}: continuity residual {residual:e} at x = {at}"
    )]
    PrecisionBreakdown {
        stage: usize,
        substep: usize,
        residual: f64,
        at: f64,
    },

    #[error("first-order condition has no sign change on ({lo}, {hi}] at stage {stage}")]
    NoBracket { stage: usize, lo: f64, hi: f64 },

    #[error("threshold {found} for stage {stage} exceeds the previous threshold {previous}")]
    MonotonicityViolation {
        stage: usize,
        found: f64,
        previous: f64,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Short variant name, printed by the CLI on failure.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidPhaseType(_) => "InvalidPhaseType",
            Error::InvalidModel(_) => "InvalidModel",
            Error::SingularResolvent { .. } => "SingularResolvent",
            Error::AssumptionViolated { .. } => "AssumptionViolated",
            Error::NoRoot { .. } => "NoRoot",
            Error::RootMultiplicity { .. } => "RootMultiplicity",
            Error::CountMismatch { .. } => "CountMismatch",
            Error::ImaginaryResidue { .. } => "ImaginaryResidue",
            Error::DomainError(_) => "DomainError",
            Error::PreconditionViolated(_) => "PreconditionViolated",
            Error::PrecisionBreakdown { .. } => "PrecisionBreakdown",
            Error::NoBracket { .. } => "NoBracket",
            Error::MonotonicityViolation { .. } => "MonotonicityViolation",
            Error::Config(_) => "ConfigError",
            Error::Io(_) => "IoError",
        }
    }

    /// Process exit code: 2 configuration, 3 assumption violation, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Io(_)
            | Error::InvalidPhaseType(_)
            | Error::InvalidModel(_) => 2,
            Error::AssumptionViolated { .. } => 3,
            _ => 4,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
