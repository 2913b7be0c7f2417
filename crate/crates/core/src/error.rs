use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },

    #[error("invalid {name}: {reason}")]
    Invalid { name: &'static str, reason: String },

    #[error("{name} = {value} is outside the valid range [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("coupling matrix is singular or ill-conditioned (condition estimate {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("frequency grids differ: {0}")]
    GridMismatch(String),

    #[error(
        "fit did not converge after {iterations} iterations (best gamma = {best_gamma:.6e} rad/s)"
    )]
    FitNotConverged {
        iterations: usize,
        best_gamma: f64,
        best: Box<crate::analysis::LorentzFit>,
    },

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("spectrum file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { name, value })
    }
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    finite(name, value)?;
    if value > 0.0 {
        Ok(value)
    } else {
        Err(Error::Invalid {
            name,
            reason: format!("must be positive, got {value}"),
        })
    }
}

pub(crate) fn non_negative(name: &'static str, value: f64) -> Result<f64> {
    finite(name, value)?;
    if value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::Invalid {
            name,
            reason: format!("must be non-negative, got {value}"),
        })
    }
}
