//! Error type shared by all core modules.

use alloc::string::String;
use core::fmt;

/// Errors produced by tensor ops, model assembly, data preparation and
/// the training loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Shape or dimension mismatch between tensors.
    Shape(String),
    /// Invalid configuration or argument value.
    Config(String),
    /// Malformed or inconsistent input data.
    Data(String),
    /// Misuse of the gradient tape (double backward, non-scalar loss, ...).
    Autodiff(String),
    /// Training-time failure (NaN loss, empty dataset, ...).
    Train(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape(m) => write!(f, "shape error: {m}"),
            Error::Config(m) => write!(f, "config error: {m}"),
            Error::Data(m) => write!(f, "data error: {m}"),
            Error::Autodiff(m) => write!(f, "autodiff error: {m}"),
            Error::Train(m) => write!(f, "train error: {m}"),
        }
    }
}

#[cfg(any(test, feature = "std"))]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

#[macro_export]
macro_rules! shape_err {
    ($($arg:tt)*) => {
        $crate::error::Error::Shape(alloc::format!($($arg)*))
    };
}
