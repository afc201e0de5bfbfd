use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {0} is not a power of two")]
    Dimension(usize),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not Hermitian (max |A - A^dagger| entry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:.3e})")]
    NotPsd { eigenvalue: f64 },

    #[error("operator norm {norm:.12} exceeds 1; divide by the normalization factor alpha first")]
    Normalization { norm: f64 },

    #[error("state vector is not normalized (norm {0:.12})")]
    NotNormalized(f64),

    #[error("degenerate ground state (E1 - E0 = {gap:.3e})")]
    DegenerateGround { gap: f64 },

    #[error("projectors share no common kernel; the model is not frustration-free")]
    NotFrustrationFree,

    #[error("{0}")]
    Validation(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("polynomial magnitude {0:.12} exceeds 1 on [-1, 1]")]
    Unbounded(f64),

    #[error("backend unsupported: {0}")]
    Unsupported(String),

    #[error("x = {0} lies outside [-1, 1]")]
    Domain(f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short status code used in CSV rows.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DegenerateGround { .. } => "degenerate",
            Error::NotFrustrationFree => "not_frustration_free",
            Error::ResourceCap(_) => "resource_cap",
            Error::Config(_) => "config",
            Error::Parameter(_) => "parameter",
            Error::InsufficientData(_) => "insufficient_data",
            _ => "error",
        }
    }

    /// Process exit code: 2 configuration, 3 violated model assumption, 4 resource cap.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parameter(_) => 2,
            Error::DegenerateGround { .. } | Error::NotFrustrationFree => 3,
            Error::ResourceCap(_) => 4,
            _ => 1,
        }
    }
}
