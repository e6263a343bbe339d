use thiserror::Error;

/// Errors raised by the analysis routines.
#[derive(Debug, Error)]
pub enum CritError {
    /// Malformed or out-of-domain input data.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid value {value} at row {row}, column {column}: {reason}")]
    BadEntry {
        row: usize,
        column: usize,
        value: f64,
        reason: &'static str,
    },

    #[error("insufficient rows: need at least {needed}, got {got}")]
    InsufficientRows { needed: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Correlation of a constant column is undefined.
    #[error("undefined correlation: column {0} is constant")]
    ConstantColumn(usize),

    #[error("absolute continuity violated: p has mass on code {code} outside support(q)")]
    AbsoluteContinuity { code: u64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("maximum of the response curve lies on the grid boundary (T = {t}); widen the grid")]
    PeakAtBoundary { t: f64 },

    #[error("exponent unbounded: {0}")]
    ExponentUnbounded(String),

    #[error("system size {n} exceeds the enumeration bound {max}; use Monte Carlo sampling")]
    EnumerationBound { n: usize, max: usize },

    #[error("optimizer did not converge after {iterations} iterations (gradient max-norm {gradient_norm:e})")]
    NonConvergence {
        iterations: usize,
        gradient_norm: f64,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CritError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        CritError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of a numerical procedure, as opposed to bad input or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            CritError::Degenerate(_)
                | CritError::PeakAtBoundary { .. }
                | CritError::ExponentUnbounded(_)
                | CritError::NonConvergence { .. }
                | CritError::AbsoluteContinuity { .. }
                | CritError::ConstantColumn(_)
        )
    }

    pub fn is_io(&self) -> bool {
        match self {
            CritError::Io(_) => true,
            CritError::Csv(e) => matches!(e.kind(), csv::ErrorKind::Io(_)),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, CritError>;
