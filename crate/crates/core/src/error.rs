use thiserror::Error;

/// Everything that can go wrong between parsing a run and writing its CSV.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("detuning mismatch: mode 1 gives {mode1}, mode 2 gives {mode2}")]
    DetuningMismatch { mode1: f64, mode2: f64 },

    #[error("truncation n_max = {n_max} is smaller than the photon multiplicity kappa = {kappa}")]
    BadTruncation { n_max: usize, kappa: usize },

    #[error("rate `{name}` is negative ({value})")]
    NegativeRate { name: &'static str, value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("block index ({n1}, {n2}) outside 0..={n_max}")]
    IndexOutOfRange { n1: usize, n2: usize, n_max: usize },

    #[error("coherent-state tail mass {tail:e} exceeds {limit:e} at cutoff {n_cut}")]
    TruncationTooSmall { tail: f64, limit: f64, n_cut: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("reduced density has non-positive trace {trace:e}")]
    ZeroTrace { trace: f64 },

    #[error("overlap magnitude {magnitude:e} too small for a defined phase")]
    UndefinedPhase { magnitude: f64 },

    #[error("integrator step collapsed to {step:e} at t = {t}")]
    StepUnderflow { t: f64, step: f64 },

    #[error("solver failure in block ({n1}, {n2}): {source}")]
    Block {
        n1: usize,
        n2: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("malformed config at line {line}: {message}")]
    MalformedConfig { line: usize, message: String },

    #[error("conflicting options: {0}")]
    ConflictingFlags(String),

    #[error("I/O failure: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code for the CLI: 2 config, 3 solver, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DetuningMismatch { .. }
            | Error::BadTruncation { .. }
            | Error::NegativeRate { .. }
            | Error::InvalidParameter { .. }
            | Error::TruncationTooSmall { .. }
            | Error::UnknownPreset(_)
            | Error::MalformedConfig { .. }
            | Error::ConflictingFlags(_) => 2,
            Error::Io(_) => 4,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
