use std::path::PathBuf;

/// Errors produced by the deployment toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid swarm configuration: {0}")]
    InvalidSwarmConfig(String),

    #[error("zero distance between transmitter and receiver")]
    ZeroDistance,

    #[error("elevation angle must lie in (0, 90] degrees, got {0}")]
    InvalidElevation(f64),

    #[error("user {user} is not associated with UAV {uav}")]
    NotAssociated { uav: usize, user: usize },

    #[error("degenerate normalization bounds: min {min} equals max {max}")]
    DegenerateBounds { min: f64, max: f64 },

    #[error("weight file: bad magic {0:?}")]
    BadMagic([u8; 4]),

    #[error("weight file: unsupported version {0}")]
    UnsupportedVersion(u32),

    #[error("weight file truncated at byte offset {offset}: needed {needed} more bytes")]
    Truncated { offset: usize, needed: usize },

    #[error("weight file: layer {layer}: {reason}")]
    ShapeChain { layer: usize, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("repair did not converge after {sweeps} sweeps")]
    RepairDidNotConverge { sweeps: usize },

    #[error("episode {episode}: {source}")]
    Episode {
        episode: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Short machine-readable category, used by the CLI error payload.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidScenario(_) | Error::InvalidSwarmConfig(_) | Error::Config(_) => "config",
            Error::ZeroDistance | Error::InvalidElevation(_) => "geometry",
            Error::NotAssociated { .. } => "association",
            Error::DegenerateBounds { .. } => "normalization",
            Error::BadMagic(_)
            | Error::UnsupportedVersion(_)
            | Error::Truncated { .. }
            | Error::ShapeChain { .. } => "weights",
            Error::DimensionMismatch { .. } => "dimension",
            Error::RepairDidNotConverge { .. } => "repair",
            Error::Episode { .. } => "episode",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
