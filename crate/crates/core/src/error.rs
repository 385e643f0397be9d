use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid needs at least {min} nodes, got {m}")]
    GridTooSmall { m: usize, min: usize },
    #[error("domain length must be positive and finite, got {0}")]
    BadLength(f64),
    #[error("state has {got} values but grid has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("states live on different grids")]
    GridMismatch,
    #[error("non-finite value at node {0}")]
    NonFinite(usize),
    #[error("coupling parameter gamma must lie in [0, 1], got {0}")]
    BadGamma(f64),
    #[error("parameter R must be finite, got {0}")]
    BadGrowth(f64),
    #[error("wavenumber {k} outside 0..={max}")]
    WavenumberOutOfRange { k: usize, max: usize },
    #[error("series order must be even and non-negative, got {0}")]
    BadSeriesOrder(i64),
    #[error("invalid integration config: {0}")]
    BadIntegrationConfig(String),
    #[error("invalid spectral config: {0}")]
    BadSpectralConfig(String),
    #[error("invalid experiment config: {0}")]
    BadConfig(String),
    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
