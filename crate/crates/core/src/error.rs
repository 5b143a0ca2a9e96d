use thiserror::Error;

/// Errors raised by the simulator core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input lies outside the domain of the operation (non-finite detuning,
    /// polarization outside [-1, 1], ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter set or configuration violates one of its invariants.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The caller asked for something the operation does not define, such as a
    /// single amplitude response for a classically mixed spin.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A sweep named a parameter that does not exist.
    #[error("unknown sweep parameter `{name}`; valid parameters: {}", valid.join(", "))]
    UnknownParameter {
        name: String,
        valid: Vec<&'static str>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
