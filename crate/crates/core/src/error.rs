use alloc::string::String;

/// Failure modes shared by every module of the core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A caller broke a documented precondition such as normalization.
    #[error("contract error: {0}")]
    Contract(String),
    /// A query fell outside the range covered by tabulated data.
    #[error("range error: {0}")]
    Range(String),
    /// An iterative solver failed to converge or lost its bracket.
    #[error("solver error: {0}")]
    Solver(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::Error::$kind(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;
