use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("zero field")]
    ZeroField,

    #[error("singular curvature")]
    SingularCurvature,

    #[error("empty intensity")]
    EmptyIntensity,

    #[error("under-resolved waist: w = {waist_m:e} m with pitch {pitch_m:e} m (need w >= 3 pitch)")]
    UnderResolved { waist_m: f64, pitch_m: f64 },

    #[error("oracle scale exceeded: n = {0} > 32")]
    OracleScale(usize),

    #[error("featureless input")]
    FeaturelessInput,

    #[error("use waist-plane generator for z = 0")]
    UseWaistPlane,

    #[error("invalid Zernike index (n = {n}, m = {m})")]
    InvalidZernike { n: u32, m: i32 },

    #[error("4D histogram memory guard exceeded: n = {0} > 64")]
    MemoryGuard(usize),

    #[error("no correlated counts")]
    NoCorrelatedCounts,

    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn format(offset: u64, message: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: message.into(),
        }
    }

    pub(crate) fn param(message: impl Into<String>) -> Self {
        Error::InvalidParameter(message.into())
    }
}
