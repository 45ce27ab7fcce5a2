use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("divisor chain: {0}")]
    Chain(String),
    #[error("{l} does not divide the top level {top}")]
    NotADivisor { l: u64, top: u64 },
    #[error("chain mismatch: {0:?} vs {1:?}")]
    ChainMismatch(Vec<u64>, Vec<u64>),
    #[error("supernatural number mismatch")]
    AmbientMismatch,
    #[error("period {period} does not divide the ambient supernatural number")]
    PeriodNotInS { period: u64 },
    #[error("nonzero mean: the cocycle equation has no solution")]
    NonzeroMean,
    #[error("character fixes q({n})")]
    CharacterFixesShift { n: i64 },
    #[error("no admissible character divisor: {0}")]
    NoAdmissibleCharacter(String),
    #[error("not a projection: {0}")]
    NotAProjection(String),
    #[error("nonzero tau ({0})")]
    NonzeroTau(i64),
    #[error("no obstruction witness within the chain (l = {l}, a = {a})")]
    NoWitness { l: u64, a: i64 },
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
