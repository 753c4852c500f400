use thiserror::Error;

/// Failures surfaced by the solver. Parameter problems and numerical
/// breakdowns are kept apart so the CLI can map them to distinct exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("rejected parameters: {0}")]
    RejectedParameters(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("point u = {u} lies within {distance:.3e} of a singular point")]
    NearSingularity { u: String, distance: f64 },
    #[error("step size underflow at t = {t} (h = {h:.3e})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("tolerance {tol:.1e} not met within {steps} steps")]
    ToleranceNotMet { tol: f64, steps: usize },
    #[error("ambiguous holonomy classification: |F - 1| = {deviation:.3e} with eps_J = {eps_j:.1e}")]
    AmbiguousClassification { deviation: f64, eps_j: f64 },
    #[error("operation not applicable: {0}")]
    NotApplicable(String),
    #[error("coefficients vanish on the requested window")]
    DegenerateWindow,
    #[error("resonant exponent: indicial shift matrix singular at j = {0}")]
    ResonantExponent(usize),
    #[error("factorial series did not converge within {0} terms")]
    SlowConvergence(usize),
    #[error("truncated diagonalization did not stabilize below N = {0}")]
    NoConvergence(usize),
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::RejectedParameters(_) | Error::InvalidConfig(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
