use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("velocity undefined for the massless zero mode")]
    UndefinedVelocity,
    #[error("frame not timelike: |omega_d * r| = {rim_speed} must be < 1")]
    InvalidFrame { rim_speed: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("mode cutoff too small: tail mass {tail:e} beyond m_max = {m_max}")]
    CutoffTooSmall { m_max: i64, tail: f64 },
    #[error("adaptive quadrature did not converge (estimated error {error:e}, tolerance {tolerance:e})")]
    QuadratureFailure { error: f64, tolerance: f64 },
    #[error("winding window exhausted after {windings} images")]
    WindowTooSmall { windings: usize },
    #[error("evaluation point within {distance:e} of the light cone of winding {winding}")]
    LightConeProximity { winding: i64, distance: f64 },
    #[error("post-selection weights vanish on the whole support")]
    ZeroDetection,
    #[error("kernel vanishes on modes {modes:?}")]
    SupportViolation { modes: Vec<i64> },
    #[error("unphysical kernel: L({m}, {m_prime}) = {value} exceeds 1")]
    UnphysicalKernel { m: i64, m_prime: i64, value: f64 },
    #[error("kernel mode sum does not converge within {terms} terms")]
    DivergentSeries { terms: usize },
    #[error("input is not Hermitian: imaginary residue {residue:e}")]
    NonHermitian { residue: f64 },
    #[error("density {value:e} below the clipping floor")]
    NegativeDensity { value: f64 },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("amplitude A1 vanishes at the evaluation point")]
    DegenerateAmplitude,
    #[error("diagonal joint probability vanishes")]
    DegenerateDiagonal,
    #[error("no ticks found")]
    NoTicks,
    #[error("at least two ticks are required, found {found}")]
    InsufficientTicks { found: usize },
    #[error("state is not symmetric under m -> -m (max deviation {deviation:e})")]
    AsymmetricState { deviation: f64 },
    #[error("integration window {window} shorter than the circulation period {period}")]
    WindowInsufficient { window: f64, period: f64 },
    #[error("configuration invalid: {0}")]
    Config(String),
    #[error("io failure: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidFrame { .. } | Error::Domain(_) => 2,
            Error::Io(_) => 4,
            _ => 3,
        }
    }
}
