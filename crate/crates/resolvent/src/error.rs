use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("singular model (zero discriminant)")]
    Singular,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unsupported modulus {0}")]
    Modulus(u32),
    #[error("insufficient precision: {0}")]
    InsufficientPrecision(String),
    #[error("f-values collide: {0}")]
    RepeatedRoots(String),
    #[error("resolvents {0} and {1} share a factor; choose another h")]
    CommonFactor(usize, usize),
    #[error("no conjugate of the subgroup contains the image")]
    NoConjugate,
    #[error("{0} conjugates pass the integrality test")]
    AmbiguousConjugate(usize),
    #[error("bad prime {0}: {1}")]
    BadPrime(u64, String),
    #[error("several resolvents vanish at p = {0}")]
    Ambiguous(u64),
    #[error(transparent)]
    Core(#[from] gl2tower_core::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
