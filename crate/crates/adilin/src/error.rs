use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("amplitude error: {0}")]
    Amplitude(String),

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("model generation error: {0}")]
    Generation(String),

    #[error("filter design error: {0}")]
    FilterDesign(String),

    #[error("model construction error: {0}")]
    ModelConstruction(String),

    #[error("structural error: {0}")]
    Structural(String),

    #[error("singular system: smallest pivot {pivot:.3e}")]
    Singular { pivot: f64 },

    #[error("design failure: {0}")]
    Design(String),

    #[error("gain search failure: {0}")]
    GainSearch(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("{0} out of range: {1}")]
    Range(&'static str, String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 config, 3 design, 4 i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Amplitude(_)
            | Error::Input(_)
            | Error::Range(_, _)
            | Error::Toml(_) => 2,
            Error::Design(_)
            | Error::Singular { .. }
            | Error::Generation(_)
            | Error::GainSearch(_) => 3,
            Error::Io(_) | Error::Json(_) | Error::Csv(_) => 4,
            _ => 3,
        }
    }
}
