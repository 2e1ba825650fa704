use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument outside the domain: {0}")]
    Domain(String),

    /// The mean detrapping time diverges when the lowest rate is zero; use
    /// the empirical pulse rate `K / T` instead.
    #[error("nonergodic: mean detrapping time undefined for gamma_min = 0")]
    Nonergodic,

    #[error("indeterminate expression at f = {0} (too close to zero frequency)")]
    Indeterminate(f64),

    #[error("frequency grids differ between spectrum estimates")]
    GridMismatch,

    #[error("carrier paths have different horizons ({0} vs {1})")]
    HorizonMismatch(f64, f64),

    #[error("empty input: {0}")]
    Empty(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}
