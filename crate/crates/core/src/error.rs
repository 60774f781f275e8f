use thiserror::Error;

/// Errors raised by the math primitives, the simulator and the experiment runner.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),
    /// A caller broke an ordering or consistency contract (e.g. an out-of-order observation).
    #[error("contract violation: {0}")]
    Contract(String),
    /// A scenario or policy configuration is invalid.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// A numerical routine failed to converge.
    #[error("numerical failure: {what} (estimate {estimate:e}, error {error:e})")]
    Numerical {
        what: String,
        estimate: f64,
        error: f64,
    },
    /// Scenario lookup failed.
    #[error("unknown scenario `{name}`; valid names: {}", valid.join(", "))]
    UnknownScenario { name: String, valid: Vec<String> },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
