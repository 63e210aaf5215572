use alloc::string::String;
use core::fmt;

/// Why a state failed the realizability check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    NonFinite,
    BelowMinimum,
    AboveMaximum,
}

/// A single offending component of a state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Name of the field the component belongs to, e.g. `"temperature"`.
    pub field: &'static str,
    pub index: usize,
    pub value: f64,
    pub kind: ViolationKind,
    /// The bound that was crossed, if any.
    pub bound: Option<f64>,
}

impl Violation {
    pub fn non_finite(field: &'static str, index: usize, value: f64) -> Self {
        Violation { field, index, value, kind: ViolationKind::NonFinite, bound: None }
    }

    /// Short tag such as `temperature-high` or `state-non-finite`.
    pub fn label(&self) -> String {
        let suffix = match self.kind {
            ViolationKind::NonFinite => "non-finite",
            ViolationKind::BelowMinimum => "low",
            ViolationKind::AboveMaximum => "high",
        };
        alloc::format!("{}-{}", self.field, suffix)
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at index {} (value {:e}", self.label(), self.index, self.value)?;
        if let Some(b) = self.bound {
            write!(f, ", bound {:e}", b)?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("non-realizable state at step {step}, sweep {sweep}, node {node}: {violation}")]
    NonRealizable {
        step: usize,
        sweep: usize,
        node: usize,
        violation: Violation,
    },

    #[error("residual history too short: {0} sweep(s) recorded, need at least 2")]
    InsufficientHistory(usize),

    #[error("step {step} unrecoverable after {restarts} restart(s): {last}")]
    Unrecoverable {
        step: usize,
        restarts: usize,
        last: Violation,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
