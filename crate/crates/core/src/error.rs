use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes shared by every module of the crate.
///
/// Variants split into two families: input/validation problems and numerical
/// tolerance breaches. [`Error::is_numeric`] tells them apart, which the CLI
/// maps onto distinct exit codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate lattice: tau = {tau}, {reason}")]
    DegenerateLattice { tau: Complex64, reason: String },

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("point {z} lies within {distance:e} of a lattice pole")]
    PoleProximity { z: Complex64, distance: f64 },

    #[error("alpha = {0} is congruent to a lattice point")]
    AlphaOnLattice(Complex64),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("singular collision: {0}")]
    SingularCollision(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("need {need} Laurent coefficients, have {have}")]
    InsufficientCoefficients { need: usize, have: usize },

    #[error("singularity #{index} is not apparent (witness {witness})")]
    NotApparent { index: usize, witness: Complex64 },

    #[error("collocation nullspace is empty (smallest singular value ratio {ratio:e})")]
    EmptyNullspace { ratio: f64 },

    #[error("Q is not constant along x: relative spread {spread:e}")]
    NonConstantQ { spread: f64 },

    #[error("path passes through a singularity near {near} (distance {distance:e})")]
    PathThroughSingularity { near: Complex64, distance: f64 },

    #[error("branch tracking lost: {0}")]
    BranchTrackingLost(String),

    #[error("least-squares fit residual {residual:e} exceeds {tolerance:e}")]
    FitResidualTooLarge { residual: f64, tolerance: f64 },

    #[error("root conditioning: {0}")]
    RootConditioning(String),

    #[error("degenerate selector: {0}")]
    DegenerateSelector(String),

    #[error("finite-difference stencil hits a singular value of lambda at tau = {tau}")]
    StencilThroughSingularity { tau: Complex64 },

    #[error("denominator vanishes: {0}")]
    DenominatorZero(String),

    #[error("branch jump between grid points {from} and {to}")]
    BranchJump { from: usize, to: usize },

    #[error("spectral degree detection failed up to g = {g_max} (best residual {residual:e})")]
    DegreeDetectionFailed { g_max: usize, residual: f64 },
}

impl Error {
    /// True for tolerance/convergence failures, false for rejected inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence(_)
                | Error::EmptyNullspace { .. }
                | Error::NonConstantQ { .. }
                | Error::BranchTrackingLost(_)
                | Error::FitResidualTooLarge { .. }
                | Error::RootConditioning(_)
                | Error::BranchJump { .. }
                | Error::DegreeDetectionFailed { .. }
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::DegenerateLattice { .. } => "DegenerateLattice",
            Error::NonFinite(_) => "NonFinite",
            Error::PoleProximity { .. } => "PoleProximity",
            Error::AlphaOnLattice(_) => "AlphaOnLattice",
            Error::NoConvergence(_) => "NoConvergence",
            Error::SingularCollision(_) => "SingularCollision",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::InsufficientCoefficients { .. } => "InsufficientCoefficients",
            Error::NotApparent { .. } => "NotApparent",
            Error::EmptyNullspace { .. } => "EmptyNullspace",
            Error::NonConstantQ { .. } => "NonConstantQ",
            Error::PathThroughSingularity { .. } => "PathThroughSingularity",
            Error::BranchTrackingLost(_) => "BranchTrackingLost",
            Error::FitResidualTooLarge { .. } => "FitResidualTooLarge",
            Error::RootConditioning(_) => "RootConditioning",
            Error::DegenerateSelector(_) => "DegenerateSelector",
            Error::StencilThroughSingularity { .. } => "StencilThroughSingularity",
            Error::DenominatorZero(_) => "DenominatorZero",
            Error::BranchJump { .. } => "BranchJump",
            Error::DegreeDetectionFailed { .. } => "DegreeDetectionFailed",
        }
    }
}

pub(crate) fn check_finite(z: Complex64, what: &str) -> Result<Complex64> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(Error::NonFinite(format!("{what} = {z}")))
    }
}
