use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A grid, value space or operation parameter is outside its admissible range.
    Config(String),
    /// A level index outside `0..=L`.
    LevelOutOfRange { level: usize, max: usize },
    /// Two objects that must agree in size do not.
    DimensionMismatch { expected: usize, found: usize },
    /// Two step functions live on different grids.
    GridMismatch,
    /// A memory or enumeration guard was hit.
    Guard {
        what: &'static str,
        value: usize,
        limit: usize,
    },
    /// An exact method was requested for a case it does not cover.
    Unsupported(&'static str),
    /// The two arguments of a kernel form have overlapping supports.
    OverlappingSupports,
    /// A quadrature did not reach its tolerance.
    Quadrature(String),
    /// The input does not satisfy the hypothesis an operation requires.
    Hypothesis(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::LevelOutOfRange { level, max } => {
                write!(f, "level {level} out of range 0..={max}")
            }
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::GridMismatch => f.write_str("step functions live on different grids"),
            Error::Guard { what, value, limit } => {
                write!(f, "{what} = {value} exceeds the guard {limit}")
            }
            Error::Unsupported(what) => write!(f, "unsupported: {what}"),
            Error::OverlappingSupports => f.write_str("kernel form requires disjoint supports"),
            Error::Quadrature(msg) => write!(f, "quadrature failure: {msg}"),
            Error::Hypothesis(msg) => write!(f, "hypothesis not satisfied: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
