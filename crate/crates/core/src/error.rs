use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// The result is not representable as a finite `f64`.
    #[error("overflow: {0}")]
    Overflow(String),

    /// Root bracketing found no sign change; an orthogonal polynomial of
    /// positive degree always has one, so this indicates a bug or bad input.
    #[error("no sign change found for {0}")]
    NoSignChange(String),

    #[error("invalid estimator configuration: {0}")]
    InvalidConfig(String),

    #[error("estimation window out of range: {0}")]
    OutOfRange(String),

    #[error("signal too short: need at least {needed} samples, have {have}")]
    SignalTooShort { needed: usize, have: usize },

    #[error("misaligned kernels: {0}")]
    Misaligned(String),

    #[error("no positive noise scale attains an SNR of {target_db} dB")]
    InfeasibleSnr { target_db: f64 },

    #[error("invalid experiment: {0}")]
    Experiment(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag, used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Overflow(_) => "overflow",
            Error::NoSignChange(_) => "no_sign_change",
            Error::InvalidConfig(_) => "invalid_config",
            Error::OutOfRange(_) => "out_of_range",
            Error::SignalTooShort { .. } => "signal_too_short",
            Error::Misaligned(_) => "misaligned",
            Error::InfeasibleSnr { .. } => "infeasible_snr",
            Error::Experiment(_) => "experiment",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
