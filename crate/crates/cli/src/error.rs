use thiserror::Error;

use wso_core::classifier::ClassifierError;
use wso_core::discrete::DiscreteError;
use wso_core::dynamics::DynamicsError;
use wso_core::graph::GraphError;

#[derive(Debug, Error)]
pub enum CliError {
    /// `pointer` is a JSON pointer into the config document.
    #[error("invalid config at '{pointer}': {message}")]
    Config { pointer: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("numerical iteration did not converge: {0}")]
    NonConvergence(String),
    #[error("{0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn config(pointer: impl Into<String>, message: impl ToString) -> Self {
        CliError::Config {
            pointer: pointer.into(),
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::NonConvergence(_) => 3,
            _ => 1,
        }
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::NoConvergence { .. } => CliError::NonConvergence(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<DiscreteError> for CliError {
    fn from(e: DiscreteError) -> Self {
        match e {
            DiscreteError::NoConvergence(_) => CliError::NonConvergence(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::Dynamics(d) => d.into(),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<ClassifierError> for CliError {
    fn from(e: ClassifierError) -> Self {
        match e {
            ClassifierError::Dynamics(d) => d.into(),
            other => CliError::Numerical(other.to_string()),
        }
    }
}
