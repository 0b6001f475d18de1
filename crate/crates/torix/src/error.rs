//! Library-wide error type.

use thiserror::Error;

/// Everything that can go wrong while building or running a counting problem.
#[derive(Error, Debug)]
pub enum Error {
    /// A fan or region document could not be parsed.
    #[error("malformed document: {0}")]
    Document(String),

    /// The fan failed a structural validation check.
    #[error("invalid fan: {0}")]
    InvalidFan(String),

    /// The divisor class group has torsion, which this library does not support.
    #[error("divisor class group has torsion (invariant factor {0})")]
    Torsion(i64),

    /// No ample basis was found within the search bound.
    #[error("projectivity not certified: no ample basis with sup-norm <= {bound}")]
    ProjectivityNotCertified { bound: i64 },

    /// A growth direction failed validation.
    #[error("invalid growth direction: {0}")]
    InvalidDirection(String),

    /// A region document failed validation.
    #[error("invalid region: {0}")]
    InvalidRegion(String),

    /// A run configuration value is out of range.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A point argument has the wrong shape (length, zero vector, ...).
    #[error("invalid point: {0}")]
    InvalidPoint(String),

    /// The problem is too large for the exact desk-scale algorithms.
    #[error("problem too large: {0}")]
    UnsupportedScale(String),

    /// Enumeration exceeded the configured node budget.
    #[error("enumeration node budget exceeded (budget {budget})")]
    NodeBudget { budget: u64 },

    /// Two independent estimates of the same quantity disagree beyond tolerance.
    #[error("consistency check failed: {0}")]
    Inconsistent(String),

    /// An internal mathematical identity was violated; this indicates a bug.
    #[error("internal identity violated: {0}")]
    Internal(String),
}

impl Error {
    /// True for failures of budget or statistical-tolerance type (as opposed
    /// to invalid input). CLI layers map these to a distinct exit code.
    pub fn is_budget_or_tolerance(&self) -> bool {
        matches!(
            self,
            Error::NodeBudget { .. } | Error::Inconsistent(_) | Error::Internal(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
