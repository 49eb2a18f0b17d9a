use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("permutation length {n} out of range 1..=64")]
    BadLength { n: usize },

    #[error("symbol {symbol} is out of range or repeated for n={n}")]
    NotABijection { symbol: u8, n: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("BFS oracle refused: n={n} exceeds 8")]
    OracleTooLarge { n: usize },

    #[error("empty permutation array")]
    EmptyArray,

    #[error("array members disagree on n: {left} vs {right}")]
    MixedLengths { left: usize, right: usize },

    #[error("restriction m={m} violated by member {index}: small symbols not in sorted order")]
    RestrictionViolated { m: usize, index: usize },

    #[error("{0}")]
    Domain(String),

    #[error("guard tripped: {0}")]
    Guard(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn guard(msg: impl Into<String>) -> Self {
        Error::Guard(msg.into())
    }
}
