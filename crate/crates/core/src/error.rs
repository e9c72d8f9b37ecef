use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point lies on the principal plane (depth {depth:e})")]
    DepthZero { depth: f64 },
    #[error("intrinsics are singular: fx={fx}, fy={fy}")]
    SingularIntrinsics { fx: f64, fy: f64 },
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("invalid camera pose: {0}")]
    InvalidPose(String),
    #[error("trifocal tensor is all zero")]
    ZeroTensor,
    #[error("tensor is not unit-normalized (Frobenius norm {norm})")]
    NotNormalized { norm: f64 },
    #[error("all points in view {view} coincide")]
    DegenerateCloud { view: usize },
    #[error("need at least {needed} point triples, got {got}")]
    TooFewTriples { needed: usize, got: usize },
    #[error("need at least {needed} point pairs, got {got}")]
    TooFewPairs { needed: usize, got: usize },
    #[error("design matrix is ill-conditioned (singular value ratio {ratio:.3e} < {threshold})")]
    IllConditioned { ratio: f64, threshold: f64 },
    #[error("point transfer is singular")]
    TransferSingular,
    #[error("essential matrix is degenerate (second singular value {sigma2:e})")]
    DegenerateEssential { sigma2: f64 },
    #[error("residual list is empty")]
    EmptyResiduals,
    #[error("invalid MSAC threshold {0}")]
    InvalidThreshold(f64),
    #[error("need at least {needed} inputs, got {got}")]
    TooFewInputs { needed: usize, got: usize },
    #[error("every calibration candidate failed")]
    AllCandidatesFailed,
    #[error("scene sampling exhausted after {rejections} rejections")]
    SamplingExhausted { rejections: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
