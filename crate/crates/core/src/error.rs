use thiserror::Error;

/// Errors raised by the geometry engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular metric: {0}")]
    SingularMetric(String),
    #[error("degenerate plane: |u ^ v|^2 = {0:e}")]
    DegeneratePlane(f64),
    #[error("frame is not orthonormal (Gram residual {0:e})")]
    NonOrthonormalFrame(f64),
    #[error("ill-conditioned least-squares fit: {0}")]
    IllConditionedFit(String),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("rank-deficient Jacobian: smallest singular value {0:e}")]
    RankDeficient(f64),
    #[error("normal complement extraction failed: {0}")]
    NormalComplementFailure(String),
    #[error("vector is not normal (tangential component {0:e})")]
    NotNormal(f64),
    #[error("empty distribution")]
    EmptyDistribution,
    #[error("semi-slant split mismatch: {0}")]
    SplitMismatch(String),
    #[error("warping function is not positive: f = {0:e}")]
    NonPositiveWarping(f64),
    #[error("not a warped product: {0}")]
    NotWarped(String),
    #[error("scenario declares no {0}")]
    MissingSplit(&'static str),
    #[error("characteristic vector field is not tangent where required: {0}")]
    MissingXi(String),
    #[error("degenerate frame: {0}")]
    FrameDegenerate(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;
