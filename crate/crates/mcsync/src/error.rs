use thiserror::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by model construction, synchronization and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid channel parameter: {0}")]
    InvalidChannel(String),

    #[error("pulse is identically zero")]
    ZeroPulse,

    #[error("invalid interval spec: {0}")]
    InvalidIntervalSpec(String),

    #[error("invalid timeline: {0}")]
    InvalidTimeline(String),

    #[error("invalid sampling grid: {0}")]
    InvalidGrid(String),

    #[error("invalid synchronizer config: {0}")]
    InvalidSyncConfig(String),

    #[error("trace too short: {0}")]
    TraceTooShort(String),

    #[error("all candidate hypotheses scored -inf for symbol {symbol}")]
    DegenerateLikelihood { symbol: usize },

    #[error("empty detection interval for symbol {symbol}")]
    EmptyDetectionInterval { symbol: usize },

    #[error("invalid detector config: {0}")]
    InvalidDetector(String),

    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),

    #[error("unknown figure name: {0}")]
    UnknownFigure(String),

    #[error("block {block}: {source}")]
    Block {
        block: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    ConfigParse(#[from] toml::de::Error),
}

impl Error {
    /// Attach the Monte Carlo block index to an error propagating out of the
    /// per-block pipeline.
    pub fn in_block(self, block: usize) -> Error {
        Error::Block {
            block,
            source: Box::new(self),
        }
    }
}
