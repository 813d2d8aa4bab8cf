use thiserror::Error;

/// Errors raised by the simulation, learning and persistence layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("could not place UAV {index} with minimum separation {d_min} m after {attempts} attempts")]
    PlacementFailure { index: usize, d_min: f64, attempts: usize },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("steering direction undefined: swarm centroid coincides with the base station")]
    DegenerateDirection,

    #[error("negative shear wind speed {speed} m/s at altitude {altitude} m")]
    NegativeSpeed { speed: f64, altitude: f64 },

    #[error("radiated power integrates to zero (all excitation weights are zero)")]
    ZeroPowerPattern,

    #[error("invalid pattern grid: {0}")]
    InvalidGrid(String),

    #[error("episode already finished; call reset first")]
    EpisodeFinished,

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension { context: &'static str, expected: usize, actual: usize },

    #[error("backward pass called with a cache from a different cell shape")]
    StaleCache,

    #[error("empty rollout buffer")]
    EmptyBuffer,

    #[error("non-finite {what} during update: {value}")]
    NonFinite { what: &'static str, value: f64 },

    #[error("topology mismatch: {0}")]
    TopologyMismatch(String),

    #[error("invalid configuration:\n{}", .0.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n"))]
    Config(Vec<crate::config::ConfigIssue>),

    #[error("parse error in {what}: {message}")]
    Parse { what: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
