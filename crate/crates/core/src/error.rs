use thiserror::Error;

use crate::hedberg::{HedbergCertificate, Region};
use crate::kernel::ExponentViolation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("value array has {found} entries, grid expects {expected}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("cell {index} holds {value}, values must be finite and nonnegative")]
    InvalidValue { index: usize, value: f64 },

    #[error("norm exponent must be >= 1, got {0}")]
    InvalidNormExponent(f64),

    #[error("point outside the grid: {0}")]
    OutOfGrid(String),

    #[error("dilation factors must be positive, got s={s}, t={t}")]
    InvalidDilation { s: f64, t: f64 },

    #[error("operands live on different grids")]
    GridMismatch,

    #[error("splitting radius must be positive, got {0}")]
    InvalidRadius(f64),

    #[error("inadmissible exponents: {0}")]
    Exponents(#[from] ExponentViolation),

    #[error("invalid window family: {0}")]
    InvalidWindows(String),

    #[error("invalid layer-cake request: {0}")]
    InvalidLayerCake(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("postcondition failed: {0}")]
    Postcondition(String),

    #[error("region {region} bound violated at point ({}, {})", certificate.point.x, certificate.point.y)]
    BoundViolation {
        region: Region,
        certificate: Box<HedbergCertificate>,
    },

    #[error("malformed grid file: {0}")]
    Format(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
