use thiserror::Error;

/// Errors raised by the kinematic and static model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid robot parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected} {what}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("subsegment {index} is invalid: {reason}")]
    InvalidState { index: usize, reason: String },

    #[error("disk {disk} is not on the route of tendon (segment {segment}, slot {slot})")]
    NotOnRoute {
        disk: usize,
        segment: usize,
        slot: usize,
    },

    #[error("disk {disk} terminates the route of tendon (segment {segment}, slot {slot})")]
    TerminalDisk {
        disk: usize,
        segment: usize,
        slot: usize,
    },

    #[error("unknown tendon (segment {segment}, slot {slot})")]
    UnknownTendon { segment: usize, slot: usize },

    #[error("invalid tendon forces: {0}")]
    InvalidForces(String),

    #[error("invalid load case: {0}")]
    InvalidLoad(String),

    #[error("non-finite value while assembling loads at disk {disk}")]
    NonFinite { disk: usize },
}

/// Errors raised by the equilibrium solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),

    #[error("invalid solver settings: {0}")]
    InvalidSettings(String),

    #[error("jacobian is numerically singular (condition estimate {condition:.3e})")]
    SingularJacobian { condition: f64 },

    #[error("non-finite residual while perturbing unknown {unknown}")]
    NonFiniteJacobian { unknown: usize },

    #[error("solution did not converge (residual norm {residual_norm:.3e})")]
    NotConverged { residual_norm: f64 },
}

/// Errors raised by the optimizer and the workspace sampler.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizeError {
    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Solve(#[from] SolveError),

    #[error("invalid GA configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid force bounds: {0}")]
    InvalidBounds(String),

    #[error("every fitness evaluation in the initial population was penalized")]
    AllPenalized,
}
