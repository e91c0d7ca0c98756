//! Full quantum-state-diffusion trajectory engine: truncated number-basis
//! operators, the Itô diffusion step, and expectation values.

mod engine;
mod operators;
mod state;

pub use engine::{
    grow_basis, initial_dim, qsd_step, qsd_step_with, QsdTrajectory, QuantumObservables,
    StepWorkspace, DEFAULT_GROWTH_FACTOR, DEFAULT_MAX_DIM, DEFAULT_MIN_BETA,
};
pub use operators::{OperatorSet, MAX_OPERATOR_DIM};
pub use state::QuantumState;
