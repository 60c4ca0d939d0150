use thiserror::Error;

use crate::kernels::PicardReport;
use crate::system::ValidationReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("point (x = {x}, xi = {xi}) lies outside the triangle 0 <= xi <= x <= 1")]
    Domain { x: f64, xi: f64 },

    #[error("invalid system: {0}")]
    InvalidSystem(Box<ValidationReport>),

    #[error("successive approximations did not converge after {} iterations (last increment {:e})", .0.iterations, .0.residual)]
    NonConvergence(Box<PicardReport>),

    #[error("volterra solve did not converge after {sweeps} sweeps (last change {change:e})")]
    VolterraNonConvergence { sweeps: usize, change: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("explicit formula requested at t = {t} but it is only valid from t = {required}")]
    ValidityWindow { t: f64, required: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
