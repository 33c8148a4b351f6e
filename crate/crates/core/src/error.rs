use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("undefined state: conditional trace {0:e} is below the normalization floor")]
    UndefinedState(f64),
    #[error("undefined direction: Bloch vector length {0:e} is too small")]
    UndefinedDirection(f64),
    #[error("degenerate background probability {0}")]
    DegenerateBackground(f64),
    #[error("malformed sequence: {0}")]
    Structural(String),
    #[error("singular inversion: {0}")]
    SingularInversion(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
