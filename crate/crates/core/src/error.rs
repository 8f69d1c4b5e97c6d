use thiserror::Error;

/// Errors raised by the model, solvers and file readers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("simulation fault at t = {time:.4} s: {reason}")]
    SimulationFault { time: f64, reason: String },

    #[error("zero-variance series: {0}")]
    ZeroVariance(String),

    #[error("input error at line {line}: {reason}")]
    Input { line: usize, reason: String },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("no samples")]
    NoSamples,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
