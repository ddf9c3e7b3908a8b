use thiserror::Error;

use crate::model::Violation;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model: {}", join(.0))]
    Invalid(Vec<Violation>),
    #[error("action {label:?} not enabled in state {state}")]
    ActionNotEnabled { state: usize, label: String },
    #[error("state {0} out of range")]
    StateOutOfRange(usize),
    #[error("invalid action label {0:?}")]
    InvalidLabel(String),
    #[error("invalid generator parameter: {0}")]
    Parameter(String),
}

fn join(vs: &[Violation]) -> String {
    vs.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Parse failure with a 1-based source position.
#[derive(Debug, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver parameter: {0}")]
    Parameter(String),
    #[error("precision unattainable: {required} steps exceed the cap of {cap}")]
    PrecisionUnattainable { required: f64, cap: u64 },
    #[error("scheduler chooses {label:?} in state {state}, which does not enable it")]
    DisabledAction { state: usize, label: String },
    #[error("scheduler references state {0} outside the model")]
    UnknownState(usize),
    #[error("scheduler grid does not cover the horizon ({covered} < {horizon})")]
    HorizonNotCovered { covered: f64, horizon: f64 },
}

#[derive(Debug, Error)]
pub enum SubspaceError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("initial state is not part of the explored set")]
    InitialNotExplored,
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Error)]
pub enum GreedyError {
    #[error("the initial state cannot be scored or removed")]
    InitialState,
    #[error("state {0} out of range")]
    StateOutOfRange(usize),
    #[error(transparent)]
    Solver(#[from] SolverError),
}
