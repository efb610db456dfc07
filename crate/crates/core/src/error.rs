use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("basis index {index} out of range (valid 1..={max})")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("payoff transform has a pole at nu = {nu}")]
    Pole { nu: f64 },

    #[error("quadrature did not reach its tail cutoff within {panels} panels")]
    NonConvergence { panels: usize },

    #[error("Fourier integral diverges: {0}")]
    Divergence(String),

    #[error("Riccati solution blew up at t = {t} (|F| = {magnitude:e})")]
    RiccatiBlowUp { t: f64, magnitude: f64 },

    #[error("Fourier price {price:e} is negative beyond the clipping threshold")]
    NegativePrice { price: f64 },

    #[error("PSD projection needed on {fraction:.4} of Wishart steps")]
    PsdClipping { fraction: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// True for errors caused by bad inputs rather than numerical breakdown.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. } | Error::IndexOutOfRange { .. } | Error::Pole { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
