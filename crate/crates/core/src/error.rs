use std::path::PathBuf;

use thiserror::Error;

use crate::elliptic::StreamField;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("nr must be at least 8 (got {0})")]
    TooFewRadialNodes(usize),
    #[error("nz must be odd and at least 9 so that z = 0 is a node (got {0})")]
    BadAxialNodes(usize),
    #[error("{name} must be positive (got {value})")]
    NonPositiveExtent { name: &'static str, value: f64 },
    #[error("field has {got} values but the grid has {expected} nodes")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("operator requires an even field")]
    OddParity,
}

#[derive(Debug, Error)]
pub enum EllipticError {
    #[error("stream-function solve did not reach residual {tol:e} in {iterations} iterations (residual {residual:e})")]
    NotConverged {
        tol: f64,
        residual: f64,
        iterations: usize,
        best: Box<StreamField>,
    },
    #[error("vorticity field is not finite")]
    NonFinite,
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("support radius {rho} must be positive and below a third of the domain ({limit})")]
    SupportTooLarge { rho: f64, limit: f64 },
    #[error("J0 must be nonnegative (got {0})")]
    NegativeJ0(f64),
    #[error("gaussian bump needs positive radius (got {0})")]
    BadBumpRadius(f64),
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("characteristics have crossed: t = {t} is past the blow-up time {blowup}")]
    CharacteristicCrossing { t: f64, blowup: f64 },
    #[error("could not bracket the characteristic foot for z = {0}")]
    NoBracket(f64),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Syntax {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: key `{key}`: {message}")]
    Key {
        path: PathBuf,
        line: usize,
        key: String,
        message: String,
    },
}

/// Top-level error for anything that runs the solver.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Elliptic(#[from] EllipticError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
