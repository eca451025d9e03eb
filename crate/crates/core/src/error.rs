use core::fmt;

/// Error taxonomy shared by every layer of the library.
///
/// The variants split into four families, which the CLI maps onto distinct
/// process exit codes:
/// precondition violations (`TruncationMismatch`, `PrimeMismatch`,
/// `NegativeExponent`, `WindowTooNarrow`, `WeightSign`, `RankMismatch`,
/// `FamilyRadius`, `NotInvertible`, `ZeroAtPrecision`, `HypothesisFails`,
/// `Malformed`), precision exhaustion (`InsufficientPrecision`), convergence
/// failures (`NoConvergence`, `SingularDiagonal`, `NotCloseEnough`), and
/// residual failures, which are not errors but verdicts reported by the
/// check routines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoreError {
    /// Two elements with different truncation windows were combined.
    TruncationMismatch,
    /// Two scalars (or elements) over different primes were combined.
    PrimeMismatch,
    /// A scalar that is indistinguishable from zero at its precision was
    /// used where a unit is required (inversion, pivoting).
    ZeroAtPrecision,
    /// An operation would return a value with no known digits.
    InsufficientPrecision,
    /// No minimal unit term exists in the window, or a Newton/geometric
    /// inverse failed to reproduce 1 exactly.
    NotInvertible,
    /// A Laurent exponent was negative where only the power-series range is
    /// meaningful (ideal membership).
    NegativeExponent,
    /// The truncation window is too small for the requested construction.
    WindowTooNarrow,
    /// A weight parameter had the wrong sign (weights must be nonpositive).
    WeightSign,
    /// A family was specialized outside its convergence radius.
    FamilyRadius,
    /// Matrix dimensions disagree.
    RankMismatch,
    /// An input is not close enough to the identity for the iteration that
    /// was asked to process it.
    NotCloseEnough,
    /// An iteration hit its cap without meeting its progress obligation.
    NoConvergence,
    /// A diagonal solve hit `c^j - 1` indistinguishable from zero.
    SingularDiagonal,
    /// A checked hypothesis of a lemma-shaped routine does not hold.
    HypothesisFails(&'static str),
    /// Structurally invalid data (deserialization or raw construction).
    Malformed(&'static str),
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::TruncationMismatch => write!(f, "truncation windows do not match"),
            CoreError::PrimeMismatch => write!(f, "primes do not match"),
            CoreError::ZeroAtPrecision => write!(f, "value is zero at its precision"),
            CoreError::InsufficientPrecision => write!(f, "no significant digits left"),
            CoreError::NotInvertible => write!(f, "element is not invertible in the window"),
            CoreError::NegativeExponent => write!(f, "negative Laurent exponent not allowed here"),
            CoreError::WindowTooNarrow => write!(f, "truncation window too narrow"),
            CoreError::WeightSign => write!(f, "weight must be nonpositive"),
            CoreError::FamilyRadius => write!(f, "specialization point outside family radius"),
            CoreError::RankMismatch => write!(f, "matrix ranks do not match"),
            CoreError::NotCloseEnough => write!(f, "input not close enough to the identity"),
            CoreError::NoConvergence => write!(f, "iteration cap reached without convergence"),
            CoreError::SingularDiagonal => write!(f, "singular diagonal entry in triangular solve"),
            CoreError::HypothesisFails(what) => write!(f, "hypothesis fails: {}", what),
            CoreError::Malformed(what) => write!(f, "malformed data: {}", what),
        }
    }
}

/// Convenience alias used across the crate.
pub type Result<T> = core::result::Result<T, CoreError>;
