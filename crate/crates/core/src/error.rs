use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Squeezing/energy below the vacuum value or not finite.
    InvalidEnergy(f64),
    /// A partition (or mode count) violates its structural constraints.
    InvalidPartition(String),
    /// Channel parameters outside their physical family.
    InvalidChannel(String),
    /// Background and target channels coincide.
    DegenerateFamily,
    /// Mismatched matrix, pattern or layout sizes.
    Dimension { expected: usize, found: usize },
    /// Non-finite input, failed factorisation or an out-of-range result.
    Numeric(String),
    /// Enumeration request beyond the supported size.
    Capacity { requested: usize, limit: usize },
    /// The requested path does not support this configuration.
    Unsupported(String),
    /// No displayed closed form exists for this sub-fidelity.
    NoClosedForm,
    /// Reports compared at different average channel use.
    Comparability { classical: f64, quantum: f64 },
    /// Malformed partition literal or image-space text.
    Parse { line: usize, message: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidEnergy(mu) => write!(f, "invalid energy mu = {mu} (need mu >= 1/2)"),
            Error::InvalidPartition(msg) => write!(f, "invalid partition: {msg}"),
            Error::InvalidChannel(msg) => write!(f, "invalid channel parameters: {msg}"),
            Error::DegenerateFamily => {
                write!(f, "background and target channels are identical")
            }
            Error::Dimension { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::Numeric(msg) => write!(f, "numeric error: {msg}"),
            Error::Capacity { requested, limit } => {
                write!(f, "size {requested} exceeds the enumeration limit {limit}")
            }
            Error::Unsupported(msg) => write!(f, "unsupported: {msg}"),
            Error::NoClosedForm => write!(f, "no closed form for this sub-fidelity"),
            Error::Comparability { classical, quantum } => {
                write!(f, "reports are not comparable: average channel use {classical} vs {quantum}")
            }
            Error::Parse { line, message } => write!(f, "parse error (line {line}): {message}"),
        }
    }
}

impl core::error::Error for Error {}
