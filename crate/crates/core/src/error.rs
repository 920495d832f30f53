use thiserror::Error;

/// Errors raised by the library. Each variant names the violated constraint.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mode 0 is not representable (fields are mean-zero)")]
    ZeroMode,
    #[error("mode {k} outside the truncation |k| <= {n_max}")]
    ModeOutOfRange { k: i64, n_max: usize },
    #[error("n_max must be at least 1")]
    EmptyModeSet,
    #[error("entries for modes {k} and {neg} are not complex conjugates")]
    NotHermitian { k: i64, neg: i64 },
    #[error("non-finite amplitude at mode {k}")]
    NonFinite { k: i64 },
    #[error("mode sets differ: {left} vs {right}")]
    ModeSetMismatch { left: usize, right: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("time step {dt} exceeds the stability bound {bound}")]
    Stability { dt: f64, bound: f64 },
    #[error("state became non-finite at step {step} (t = {t})")]
    Divergence { step: usize, t: f64 },
    #[error("trajectory has {len} samples, need at least {need}")]
    TrajectoryTooShort { len: usize, need: usize },
    #[error("parameters outside the lemma regime: {0}")]
    Regime(String),
    #[error("n_max = {n_max} exceeds the brute-force limit {limit}")]
    TooLarge { n_max: usize, limit: usize },
    #[error("fixed-point iteration left the ball of radius {radius} (norm {norm}) at iteration {iteration}")]
    BallEscape { radius: f64, norm: f64, iteration: usize },
    #[error("fixed-point iteration did not converge after {iterations} iterations (last delta {delta})")]
    NoConvergence { iterations: usize, delta: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
