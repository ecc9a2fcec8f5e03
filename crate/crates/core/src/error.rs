use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("cos M is singular (|det| = {det:e})")]
    SingularCos { det: f64 },
    #[error("matrix is singular (|det| = {det:e})")]
    Singular { det: f64 },
    #[error("square-root branch is ambiguous: both roots are a quarter turn from the reference")]
    AmbiguousBranch,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("vector is not on the complex unit sphere (<a,a> = {re} + {im}i)")]
    NotOnSphere { re: f64, im: f64 },
    #[error("intertwiner image leaves the Gaussian class")]
    NonInvertibleTransform,
    #[error("Gaussian product leaves the Gaussian class")]
    ProductSingular,
    #[error("element has no inverse in the Gaussian class")]
    NoInverseInClass,
    #[error("singular point of the star exponential near t = {re} + {im}i")]
    SingularPoint { re: f64, im: f64 },
    #[error("integration ran into a singularity at step {step}")]
    SingularEncountered { step: usize },
    #[error("integration step size underflow")]
    StepUnderflow,
    #[error("sheet path crosses a singular point near s = {0}")]
    PathThroughSingularity(f64),
    #[error("parse error at offset {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("generator index {index} out of range 1..={m}")]
    IndexOutOfRange { index: usize, m: usize },
    #[error("exp_* argument must be quadratic plus constant: {0}")]
    NonQuadraticExponent(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    /// True for errors that mean "the value is at a point of a singular set".
    pub fn is_singular_point(&self) -> bool {
        matches!(
            self,
            Error::SingularPoint { .. }
                | Error::SingularCos { .. }
                | Error::PathThroughSingularity(_)
                | Error::SingularEncountered { .. }
        )
    }

    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::NotSymmetric
                | Error::NotOnSphere { .. }
                | Error::Parse { .. }
                | Error::IndexOutOfRange { .. }
                | Error::NonQuadraticExponent(_)
                | Error::Invalid(_)
        )
    }
}
