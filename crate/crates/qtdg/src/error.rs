use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("{what} must be positive, got {value:.6e} at {location}")]
    NonpositiveCoefficient {
        what: &'static str,
        value: f64,
        location: String,
    },

    #[error("Taylor data of order {have} is insufficient: {what} needs order {need}")]
    InsufficientTaylorOrder {
        need: u32,
        have: u32,
        what: &'static str,
    },

    #[error("missing derivative sample for multi-index {0}")]
    MissingDerivative(String),

    #[error(
        "layer {layer} system is singular: pivot {pivot:.3e} below threshold {threshold:.3e}"
    )]
    SingularLayer {
        layer: usize,
        pivot: f64,
        threshold: f64,
    },

    #[error("mesh construction failed: {0}")]
    Mesh(String),

    #[error("unknown benchmark problem `{0}`")]
    UnknownProblem(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{what} = {value:.6e} outside supported range {range}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
