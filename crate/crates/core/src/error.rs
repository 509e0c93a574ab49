use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite input: {what} = {value}")]
    NonFinite { what: &'static str, value: f64 },

    #[error("invalid period {0}: must be positive and finite")]
    InvalidPeriod(f64),

    #[error("invalid symmetry {0}: must be positive and finite")]
    InvalidSymmetry(f64),

    #[error("angle {theta} outside [{lo}, {hi})")]
    AngleOutOfRange { theta: f64, lo: f64, hi: f64 },

    #[error("n_step = {0}, at least 3 phase-shifting steps are required")]
    TooFewSteps(usize),

    #[error("indeterminate phase: both weighted sums vanish")]
    IndeterminatePhase,

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("dual code halves differ in length: {x1} vs {x2}")]
    UnbalancedDualCode { x1: usize, x2: usize },

    #[error("invalid loss weight {name} = {value}: must be non-negative and finite")]
    InvalidWeight { name: &'static str, value: f64 },

    #[error("invalid loss term {name} = {value}: must be non-negative and finite")]
    InvalidLossTerm { name: &'static str, value: f64 },

    #[error("invalid dataset parameter: {0}")]
    InvalidDataset(String),

    #[error("invalid training config: {0}")]
    InvalidConfig(String),

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Diverged { epoch: usize, loss: f64 },
}

pub(crate) fn ensure_finite(what: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { what, value })
    }
}
