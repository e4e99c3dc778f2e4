use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument was outside its documented domain.
    InvalidArgument(&'static str),
    /// Operand shapes do not line up, as `(rows, cols)`.
    DimensionMismatch { expected: (usize, usize), found: (usize, usize) },
    /// A normalizing quantity was zero.
    DivisionByZero(&'static str),
    /// The effective channel has (numerically) zero gain.
    DegenerateChannel,
    /// No cluster size or grid point satisfies the power budget.
    InfeasibleAllocation(&'static str),
    /// An iterative routine hit its iteration cap.
    ConvergenceFailure(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {}x{}, found {}x{}", expected.0, expected.1, found.0, found.1)
            }
            Error::DivisionByZero(what) => write!(f, "division by zero: {what}"),
            Error::DegenerateChannel => f.write_str("degenerate channel: effective gain is zero"),
            Error::InfeasibleAllocation(msg) => write!(f, "infeasible allocation: {msg}"),
            Error::ConvergenceFailure(what) => write!(f, "{what} failed to converge"),
        }
    }
}

impl core::error::Error for Error {}
