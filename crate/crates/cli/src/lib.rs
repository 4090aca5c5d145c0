//! Support code for the `nlconv` command-line tool.

pub mod angle;

use nlconv::Error;

/// Process exit code for an error: 2 for bad input, 3 for numerical
/// failures, 4 when post-selection never succeeds.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) | Error::Io(_) | Error::Json(_) => 2,
        Error::NumericalDomain(_) | Error::NoSolution(_) => 3,
        Error::Degenerate { .. } => 4,
    }
}
