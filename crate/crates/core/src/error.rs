use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown cell `{0}`")]
    UnknownCell(String),

    #[error("ambiguous cell reference `{0}`")]
    AmbiguousCell(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("invalid subcomplex: boundary of `{cell}` meets `{face}`, which is not in the subcomplex")]
    InvalidSubcomplex { cell: String, face: String },

    #[error("not in B_{dim}: chain is not a boundary")]
    NotBoundary { dim: usize },

    #[error("chain is not a cycle")]
    NotCycle,

    #[error("weights not generic: {0}")]
    WeightsNotGeneric(String),

    #[error("bad parameter point at t = {t:.6}: {reason}")]
    BadParameter { t: f64, reason: String },

    #[error("τ_D = {tau} below adiabatic threshold τ₀ ≈ {tau0:.4e} (condition estimate {condition:.3e})")]
    BelowAdiabaticThreshold { tau: f64, tau0: f64, condition: f64 },

    #[error("integration failed at t = {t:.6}: {reason}; try larger tolerances or a smaller τ_D·β")]
    Integration { t: f64, reason: String },

    #[error("spectral gap not positive ({0:e})")]
    NonPositiveGap(f64),

    #[error("unknown example `{0}`")]
    UnknownExample(String),
}

impl Error {
    /// Failures of the numerical regime as opposed to bad input data.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::WeightsNotGeneric(_)
                | Error::BadParameter { .. }
                | Error::BelowAdiabaticThreshold { .. }
                | Error::Integration { .. }
                | Error::NonPositiveGap(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
