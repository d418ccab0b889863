use nalgebra::DVector;
use thiserror::Error;

use crate::engine::Trajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in `{field}`: expected {expected}, got {got}")]
    DimensionMismatch {
        field: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid feasible set: {0}")]
    InvalidSet(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("missing declared constant `{0}`")]
    MissingConstant(&'static str),

    #[error("gradient check failed for {name}: relative error {rel_err:.3e} at sample {sample}")]
    GradientCheck {
        name: String,
        rel_err: f64,
        sample: usize,
    },

    #[error(
        "alternating projection did not converge after {iterations} iterations (residual {residual:.3e})"
    )]
    ProjectionDiverged {
        iterations: usize,
        residual: f64,
        last: DVector<f64>,
    },

    #[error("oracle did not converge at step {k} after {iterations} iterations (residual {residual:.3e})")]
    OracleDiverged {
        k: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("run aborted at step {step}: {source}")]
    RunAborted {
        step: usize,
        #[source]
        source: Box<Error>,
        partial: Box<Trajectory>,
    },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn check_dim(field: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { field, expected, got })
    }
}
