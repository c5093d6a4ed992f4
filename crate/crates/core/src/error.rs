use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u32, u32),
    #[error("matrix is not invertible mod {0}")]
    NotInvertible(u32),
    #[error("unsupported modulus {0}")]
    InvalidModulus(u32),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("cannot lift to modulus {target} below level {level}")]
    LiftBelowLevel { level: u32, target: u32 },
    #[error("subgroup is not contained in the parent")]
    NotContained,
    #[error("generators do not define an open subgroup at modulus {0}")]
    NotOpen(u32),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
