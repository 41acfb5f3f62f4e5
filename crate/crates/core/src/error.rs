use alloc::string::String;

/// Errors raised while validating models or evaluating transforms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("model is not stable (verdict {0}); analytic transforms need a subcritical system")]
    NotStable(&'static str),

    #[error("infinite product did not reach truncation after {terms} terms (rho_M = {rho_m})")]
    Truncation { terms: usize, rho_m: f64 },

    #[error("unsupported: {0}")]
    Unsupported(&'static str),

    #[error("simulation aborted after {0} events; check the drift of the served processes")]
    Runaway(u64),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! domain {
    ($($arg:tt)*) => { $crate::Error::Domain(alloc::format!($($arg)*)) };
}

macro_rules! invalid {
    ($($arg:tt)*) => { $crate::Error::InvalidModel(alloc::format!($($arg)*)) };
}

macro_rules! numeric {
    ($($arg:tt)*) => { $crate::Error::Numeric(alloc::format!($($arg)*)) };
}

pub(crate) use {domain, invalid, numeric};
