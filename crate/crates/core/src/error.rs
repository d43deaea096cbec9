use thiserror::Error;

/// Crate-wide error type.
///
/// Variants are grouped so the CLI can map them onto exit codes:
/// configuration problems exit with 2, everything else with 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point inside body (level {level:.3e})")]
    InsideBody { level: f64 },

    #[error("outside tubular neighborhood (distance {distance:.6e} >= radius {radius:.6e})")]
    OutsideTube { distance: f64, radius: f64 },

    #[error("degenerate surface point (|grad f| = {gradient:.3e})")]
    DegenerateSurface { gradient: f64 },

    #[error("point not on surface (level {level:.3e})")]
    NotOnSurface { level: f64 },

    #[error("unsupported surface kind: {0}")]
    UnsupportedSurface(String),

    #[error("band ({inner:.6e}, {outer:.6e}) exits tube of radius {radius:.6e}")]
    BandExitsTube { inner: f64, outer: f64, radius: f64 },

    #[error("mollification stencil exits domain (distance {distance:.6e} < scale {scale:.6e})")]
    StencilExitsDomain { distance: f64, scale: f64 },

    #[error("out of data coverage at ({x:.6}, {y:.6}, {z:.6}), t = {t:.6}")]
    OutOfCoverage { x: f64, y: f64, z: f64, t: f64 },

    #[error("no-slip violated; wall stress formulas inequivalent ({detail})")]
    NoSlipViolated { detail: String },

    #[error("insufficient near-wall samples: {0}")]
    InsufficientWallSamples(String),

    #[error("projection did not converge after {iterations} iterations")]
    ProjectionFailed { iterations: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) | Error::BandExitsTube { .. } => 2,
            _ => 3,
        }
    }
}
