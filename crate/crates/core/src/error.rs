use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A scalar argument is out of its admissible range.
    InvalidArgument(&'static str),
    /// `L` is not a multiple of the number of column blocks.
    SectionsNotDivisible { sections: usize, col_blocks: usize },
    /// The rounded code length came out as zero.
    ZeroCodeLength,
    LengthMismatch { what: &'static str, expected: usize, found: usize },
    /// `Λ < 2ω − 1` for an (ω, Λ) base matrix.
    CouplingTooShort { omega: usize, lambda: usize },
    InvalidBaseMatrix(&'static str),
    /// Base matrix dimensions do not match the code parameters.
    BaseMismatch,
    /// A column of the base matrix has no positive entry.
    EmptyColumn(usize),
    /// Required Hadamard order exceeds what the fast path supports.
    HadamardOrder(u32),
    UnknownUnit,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::SectionsNotDivisible { sections, col_blocks } => write!(
                f,
                "number of sections {sections} is not divisible by the {col_blocks} column blocks"
            ),
            Error::ZeroCodeLength => f.write_str("code length rounds to zero"),
            Error::LengthMismatch { what, expected, found } => {
                write!(f, "{what}: expected length {expected}, found {found}")
            }
            Error::CouplingTooShort { omega, lambda } => write!(
                f,
                "coupling length {lambda} is shorter than 2*omega-1 for omega = {omega}"
            ),
            Error::InvalidBaseMatrix(msg) => write!(f, "invalid base matrix: {msg}"),
            Error::BaseMismatch => {
                f.write_str("base matrix shape does not match the code parameters")
            }
            Error::EmptyColumn(c) => write!(f, "base matrix column {c} has no positive entry"),
            Error::HadamardOrder(k) => write!(f, "Hadamard order 2^{k} is too large"),
            Error::UnknownUnit => f.write_str("unknown rate unit (expected bits or nats)"),
        }
    }
}

impl core::error::Error for Error {}
