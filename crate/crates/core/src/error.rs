use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied an argument outside its documented domain.
    #[error("invalid input: {0}")]
    Input(String),

    /// An algorithm or experiment configuration is incomplete or inconsistent.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A construction (e.g. a recoverable sampling set) could not be completed.
    #[error("construction failed: {0}")]
    Construction(String),

    /// A numerical routine hit a singular or degenerate case.
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// The mean-square recursion has spectral radius at or above one.
    #[error("mean-square unstable: spectral radius {spectral_radius:.6} >= 1 (mu = {mu}, mean-square bound = {bound:.6})")]
    Unstable {
        spectral_radius: f64,
        mu: f64,
        bound: f64,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
