use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid density state: {0}")]
    InvalidState(String),

    #[error("invalid observable: {0}")]
    InvalidObservable(String),

    #[error("outcome {outcome} is not in the spectrum of '{observable}'")]
    UnknownOutcome { outcome: f64, observable: String },

    #[error("observables '{0}' and '{1}' do not commute")]
    NonCommuting(String, String),

    #[error("observables '{0}' and '{1}' must act on different subsystems")]
    SameSubsystem(String, String),

    #[error("cannot condition on an impossible outcome (Tr[rho P] = {0:e})")]
    ZeroProbabilityBranch(f64),

    #[error("no detection probability for state '{state}' and observable '{observable}'")]
    MissingDetection { state: String, observable: String },

    #[error("conditional probability undefined: detection probability is {0:e}")]
    UndefinedConditional(f64),
}
