use thiserror::Error;

/// Errors raised by the numerical engine.
///
/// Every variant maps onto a stable, machine-readable code (see [`ZenoError::code`])
/// so that sweep rows and CLI error records can report failures without
/// depending on the human-readable message.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ZenoError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("integral diverges: {0}")]
    Divergence(String),
    #[error("quadrature did not converge: {0}")]
    NonConverged(String),
    #[error("model mismatch: {0}")]
    ModelMismatch(String),
    #[error("degenerate residue roots (exceptional point): |a+ - a-| = {separation:e}")]
    DegenerateRoots { separation: f64 },
    #[error("survival amplitude underflow: |alpha(tau)| = {magnitude:e}")]
    AmplitudeUnderflow { magnitude: f64 },
    #[error("time step too coarse: dt vs dt/2 deviation {deviation:e} exceeds {limit:e}")]
    StepTooCoarse { deviation: f64, limit: f64 },
    #[error("no sign change of G''(delta) over [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("gamma function pole at order {0}")]
    PoleOrder(f64),
}

impl ZenoError {
    pub fn code(&self) -> &'static str {
        match self {
            ZenoError::Domain(_) => "DOMAIN",
            ZenoError::InvalidConfig(_) => "INVALID_CONFIG",
            ZenoError::Divergence(_) => "DIVERGENCE",
            ZenoError::NonConverged(_) => "NON_CONVERGED",
            ZenoError::ModelMismatch(_) => "MODEL_MISMATCH",
            ZenoError::DegenerateRoots { .. } => "DEGENERATE_ROOTS",
            ZenoError::AmplitudeUnderflow { .. } => "AMPLITUDE_UNDERFLOW",
            ZenoError::StepTooCoarse { .. } => "STEP_TOO_COARSE",
            ZenoError::NoSignChange { .. } => "NO_SIGN_CHANGE",
            ZenoError::PoleOrder(_) => "POLE_ORDER",
        }
    }
}

pub type Result<T> = std::result::Result<T, ZenoError>;
