use thiserror::Error;

/// Errors raised by the history-matching engine.
#[derive(Debug, Error)]
pub enum Error {
    /// A value fell outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    /// Configuration or table failed validation.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Integration did not reach a steady state.
    #[error("steady state not reached for {context}: {reason}")]
    NonConverged { context: String, reason: String },

    /// Emulator fitting failed (typically a covariance matrix that is not positive definite).
    #[error("emulator fit failed for {output}: {reason}")]
    Fit { output: String, reason: String },

    /// Rejection sampling accepted too few candidates.
    #[error("acceptance rate {rate:.2e} below threshold {threshold:.2e} after {candidates} candidates; switch to MCMC sampling")]
    AcceptanceTooLow {
        rate: f64,
        threshold: f64,
        candidates: usize,
    },

    /// Every MCMC chain failed to move.
    #[error("MCMC chains are stuck (acceptance {acceptance:.2e}); reduce the proposal step")]
    ChainsStuck { acceptance: f64 },

    /// The region has no known members.
    #[error("non-implausible region is empty")]
    EmptyRegion,

    /// A wave was aborted because diagnostics failed.
    #[error("wave {wave} aborted: {reason}")]
    WaveAborted { wave: usize, reason: String },

    /// Singular or degenerate sample statistics.
    #[error("degenerate sample: {0}")]
    Degenerate(String),

    /// Error from an external simulator process.
    #[error("simulator error: {0}")]
    Simulator(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
