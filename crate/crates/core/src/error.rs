use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate measure: {0}")]
    DegenerateMeasure(String),
    #[error("degenerate construction: {0}")]
    DegenerateConstruction(String),
    #[error("topology error: {0}")]
    Topology(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("solver error: {message} (residual {residual:.3e})")]
    Solver { message: String, residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
