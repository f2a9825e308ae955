use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid rectangle ({a},{b};{c},{d}): need a<=c and b<=d")]
    InvalidRect { a: i64, b: i64, c: i64, d: i64 },

    #[error("{name} = {value} is not a probability in [0,1]")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("exhaustive enumeration capped at area {cap}, got area {area}")]
    EnumerationCap { area: u64, cap: u64 },

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("no convergence after {iterations} iterations: {detail}")]
    NonConvergence { iterations: usize, detail: String },

    #[error("scan range exhausted: {0}")]
    ScanExhausted(String),

    #[error("no mechanism: {0}")]
    NoMechanism(String),

    #[error("duplicate mechanism spec in family: {0}")]
    DuplicateSpec(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::InvalidProbability { name, value })
    }
}

pub(crate) fn out_of_range<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::OutOfRange(msg.into()))
}
