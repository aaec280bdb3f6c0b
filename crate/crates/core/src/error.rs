use thiserror::Error;

/// Every failure the library reports.
///
/// Numerical failures (`NonConvergence`, `ToleranceNotMet`) are separated from
/// geometric ones so the CLI can map them to distinct exit codes.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("interpolation nodes {i} and {j} coincide")]
    DuplicateNode { i: usize, j: usize },
    #[error("singular linear system: {0}")]
    SingularSystem(String),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("quadrature tolerance not met: {0}")]
    ToleranceNotMet(String),
    #[error("leading coefficient degenerates: degree {degree} below {required}")]
    DegenerateLeading { degree: usize, required: usize },
    #[error("singular curve: branch points {i} and {j} are {distance:.3e} apart")]
    SingularCurve { i: usize, j: usize, distance: f64 },
    #[error("point x = {x} is a branch point")]
    BranchPointHit { x: String },
    #[error("point lies on the divisor y = 0")]
    OnDivisor,
    #[error("point {index} sits on a branch point")]
    OnBranchPoint { index: usize },
    #[error("path passes within {distance:.3e} of branch point {index}")]
    ClearanceViolation { index: usize, distance: f64 },
    #[error("segment between branch points passes branch point {index}")]
    PathThroughBranchPoint { index: usize },
    #[error("lost track of the sheet near x = {x}")]
    LostTrack { x: String },
    #[error("branch-point matching failed under perturbation: {0}")]
    BranchPointCollision(String),
    #[error("flow approached a branch point at t = {t}")]
    BranchApproach { t: f64 },
    #[error("partial fractions leave a residue of {0:.3e}")]
    NonPolynomialResidue(f64),
    #[error("separation polynomial has a near-multiple root")]
    DegenerateSeparation,
    #[error("config error at {field}: {message}")]
    Config { field: String, message: String },
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Failures of the numerical machinery itself rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonConvergence(_) | Error::ToleranceNotMet(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
