use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("singular argument: {0}")]
    SingularArgument(String),
    #[error("invalid excitation: {0}")]
    InvalidSpec(String),
    #[error("Newton iteration stalled after {iterations} steps (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("discretized integral equation is singular; raise the quadrature order")]
    SingularSystem,
    #[error("density {0} cannot be bracketed by the Fermi boundary search")]
    NoBracket(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("determinant is numerically singular")]
    NumericallySingular,
    #[error("roots {0} and {1} coincide")]
    CoincidingRoots(usize, usize),
    #[error("kernel singularity on or near the contour: {0}")]
    ContourSingularity(String),
    #[error("auxiliary root collides with a twisted root: {0}")]
    RootCollision(String),
    #[error("evaluation point {0} lies on the cut")]
    OnCut(String),
    #[error("Barnes G evaluated at nonpositive integer {0}")]
    PoleAtNonpositiveInteger(f64),
    #[error("Gamma function pole at {0}")]
    GammaPole(f64),
    #[error("rapidity {0} is within the Fermi-edge margin")]
    RegimeViolation(f64),
    #[error("chain length {0} exceeds the exact-diagonalization limit")]
    SizeLimit(usize),
    #[error("operator violates the Sz selection rule: {0}")]
    SelectionRule(String),
    #[error("scaling fit needs at least 4 system sizes, got {0}")]
    FitIllConditioned(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by bad input rather than numerical trouble.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParams(_)
                | Error::NonFinite(_)
                | Error::InvalidSpec(_)
                | Error::DimensionMismatch(_)
                | Error::SizeLimit(_)
                | Error::SelectionRule(_)
                | Error::RegimeViolation(_)
                | Error::FitIllConditioned(_)
                | Error::NoBracket(_)
                | Error::Io(_)
                | Error::Json(_)
                | Error::Csv(_)
        )
    }
}
