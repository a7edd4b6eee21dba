use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("empty set: {0}")]
    EmptySet(String),
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("symbol {symbol} outside alphabet of size {alphabet}")]
    Alphabet { symbol: usize, alphabet: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("generator {0} is not invertible")]
    Invertibility(usize),
    #[error("determinant vanishes at ({x}, {y})")]
    Degeneracy { x: f64, y: f64 },
    #[error("not a contraction: operator norm {0} >= 1")]
    NotAContraction(f64),
    #[error("no cover of V found with up to {max_anchors} anchors (uncovered fraction {uncovered})")]
    Construction { max_anchors: usize, uncovered: f64 },
    #[error("attractor iteration did not converge after {iterations} steps (last distance {last_distance})")]
    Convergence { iterations: usize, last_distance: f64 },
    #[error("word evaluation budget of {budget} exceeded (uncovered fraction so far {uncovered})")]
    Budget { budget: u64, uncovered: f64 },
    #[error("diameter did not drop below {delta} within {max_r} steps (last diameter {last_diameter})")]
    Horizon {
        delta: f64,
        max_r: usize,
        last_diameter: f64,
    },
    #[error("multiplier {0} outside (1/2, 1)")]
    Multiplier(f64),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
