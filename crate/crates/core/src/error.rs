use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Bad user input: parameters out of range, malformed JSON, unknown names.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("unseparable contour: pole sets overlap (gap {gap:.3e})")]
    UnseparableContour { gap: f64 },

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("precision not reached: estimated error {achieved:.3e} exceeds {target:.3e}")]
    Precision { achieved: f64, target: f64 },

    #[error("series divergence guard tripped: {0}")]
    Divergence(String),

    #[error("non-generic exponents: {0}")]
    NonGeneric(String),

    #[error("outside asymptotic regime: {0}")]
    Regime(String),

    #[error("value out of range: {0}")]
    Range(String),
}

impl Error {
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Validation(_))
    }

    /// Short stable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Validation(_) => "validation",
            Error::UnseparableContour { .. } => "unseparable_contour",
            Error::Convergence(_) => "convergence",
            Error::Precision { .. } => "precision",
            Error::Divergence(_) => "divergence",
            Error::NonGeneric(_) => "non_generic",
            Error::Regime(_) => "regime",
            Error::Range(_) => "range",
        }
    }

    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        if self.is_validation() {
            2
        } else {
            3
        }
    }
}

pub(crate) fn validate(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Validation(msg()))
    }
}
