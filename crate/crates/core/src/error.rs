use thiserror::Error;

/// Errors produced anywhere in the control stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid pulse: {0}")]
    InvalidPulse(String),

    #[error("duplicate acquisition id {0} in sequence")]
    DuplicateAcquisition(u32),

    #[error("readout pulses overlap on channel `{channel}` at the same frequency")]
    ReadoutCollision { channel: String },

    #[error("invalid platform configuration: {0}")]
    Config(String),

    #[error("unknown parameter path `{0}`")]
    UnknownParameter(String),

    #[error("unsupported sweep: {0}")]
    Sweep(String),

    #[error("instrument `{instrument}` failed: {source}")]
    Controller {
        instrument: String,
        #[source]
        source: Box<Error>,
    },

    #[error("emulation error: {0}")]
    Emulation(String),

    #[error("transpiler error: {0}")]
    Transpile(String),

    #[error("compiler error: {0}")]
    Compile(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("matrix is singular or ill-conditioned (condition number {condition:.3e})")]
    Singular { condition: f64 },

    #[error("acquisition error: {0}")]
    Acquisition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Whether the failure happened while running or fitting, as opposed to
    /// rejecting bad input. Drives the CLI exit code.
    pub fn is_runtime_failure(&self) -> bool {
        matches!(
            self,
            Error::Controller { .. } | Error::Emulation(_) | Error::Fit(_) | Error::Singular { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
