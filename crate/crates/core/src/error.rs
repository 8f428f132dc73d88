use thiserror::Error;

/// Errors raised by the geometry and dynamics routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("derivative order {0} exceeds the supported maximum of 5")]
    OrderTooHigh(usize),
    #[error("curve is not closed; periodic differentiation is unavailable")]
    NotClosed,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("speed profile must be strictly positive (min {min})")]
    NonPositiveSpeed { min: f64 },
    #[error("point is off the curve or surface (residual {residual:e})")]
    OffSurface { residual: f64 },
    #[error("degenerate configuration, fit is ambiguous (singular value ratio {ratio:e})")]
    AmbiguousFit { ratio: f64 },
    #[error("ray is tangent to the curve (|u·n| = {cosine:e})")]
    Tangency { cosine: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("curve is not strictly convex: {0}")]
    NotConvex(String),
    #[error("equiaffine frame inconsistent (γ″ coefficient {coefficient:e})")]
    FrameInconsistent { coefficient: f64 },
    #[error("geodesic through the given points is undefined: {0}")]
    UndefinedGeodesic(String),
    #[error("area drift {drift:e} exceeds tolerance {tol:e}")]
    DriftTooLarge { drift: f64, tol: f64 },
    #[error("root solve failed to bracket: {0}")]
    NoBracket(String),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("invalid specification: {0}")]
    Spec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
