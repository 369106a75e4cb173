use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter fell outside the domain of the operation.
    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    /// A matrix failed one of the density-matrix invariants.
    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("{0}")]
    Domain(String),

    /// Malformed input file. `line` is 1-based when known.
    #[error("parse error{}: {msg}", .line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Format { line: Option<usize>, msg: String },

    #[error("optimizer did not converge: {0}")]
    Convergence(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn format(line: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Format { line, msg: msg.into() }
    }
}

/// Checks `lo <= value <= hi`.
pub(crate) fn check_range(name: &'static str, value: f64, lo: f64, hi: f64, range: &'static str) -> Result<()> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value, range })
    }
}
