use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// A symbol that is not a coordinate (or parameter) of the chart in use.
    UnknownName(String),
    ChartMismatch { expected: String, found: String },
    DivisionByZero { subterm: String },
    UnboundOpaque(String),
    MissingValue(String),
    DegreeMismatch(String),
    DimensionMismatch(String),
    Invalid(String),
    Cfl { dt: f64, max_dt: f64 },
    NonFinite(String),
    Parse { col: usize, msg: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::UnknownName(n) => write!(f, "unknown name `{n}`"),
            Error::ChartMismatch { expected, found } => {
                write!(f, "chart mismatch: expected `{expected}`, found `{found}`")
            }
            Error::DivisionByZero { subterm } => write!(f, "division by zero in `{subterm}`"),
            Error::UnboundOpaque(n) => write!(f, "opaque function `{n}` has no binding"),
            Error::MissingValue(n) => write!(f, "point assigns no value to `{n}`"),
            Error::DegreeMismatch(m) => write!(f, "VForm degree mismatch: {m}"),
            Error::DimensionMismatch(m) => write!(f, "dimension mismatch: {m}"),
            Error::Invalid(m) => f.write_str(m),
            Error::Cfl { dt, max_dt } => write!(
                f,
                "CFL violation: dt = {dt:e} exceeds dx/c = {max_dt:e}; use dt <= {max_dt:e}"
            ),
            Error::NonFinite(m) => write!(f, "non-finite value: {m}"),
            Error::Parse { col, msg } => write!(f, "column {col}: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
