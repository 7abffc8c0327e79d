use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot parse configuration: {0}")]
    Parse(#[from] toml::de::Error),

    #[error(transparent)]
    Beam(#[from] multibeam::BeamError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl ExperimentError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        ExperimentError::Config(msg.into())
    }
}
