use thiserror::Error;

use crate::expr::ExprError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("outside domain: {0}")]
    OutOfDomain(String),
    #[error("unsupported geometry: {0}")]
    GeometryUnsupported(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("field error: {0}")]
    Field(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("expression error: {0}")]
    Expr(#[from] ExprError),
}

pub type Result<T> = std::result::Result<T, Error>;
