use thiserror::Error;

/// Errors surfaced by the engines and analyses.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// The divergence guard tripped: the trajectory left the region where
    /// the physical attractors live, which signals wrong parameters or an
    /// unstable step size.
    #[error("trajectory escaped at t = {t:.6}: |x| = {x:.6e} exceeds guard {guard:.6e}")]
    TrajectoryEscaped { t: f64, x: f64, guard: f64 },

    #[error("non-finite {context} at t = {t:.6}")]
    NonFinite { t: f64, context: &'static str },

    #[error("negative or non-finite time step dt = {0}")]
    BadTimeStep(f64),

    #[error("basis dimension {requested} exceeds capacity {max}")]
    BasisCapacity { requested: usize, max: usize },

    #[error(
        "coherent state tail mass {tail:.3e} exceeds tolerance {tolerance:.3e} \
         at dimension {dim}; use at least {suggested} levels"
    )]
    CoherentTail {
        tail: f64,
        tolerance: f64,
        dim: usize,
        suggested: usize,
    },

    #[error("dimension mismatch: state has {state_dim} levels, operator has {op_dim}")]
    DimensionMismatch { state_dim: usize, op_dim: usize },

    #[error("states are at different times: {a} vs {b}")]
    TimeMismatch { a: f64, b: f64 },

    #[error(
        "step dt = {dt:.3e} too coarse for basis dimension {dim} \
         (spectral bound {bound:.3e}, stability limit {limit:.2}); \
         increase sde_steps_per_period"
    )]
    UnstableStep {
        dt: f64,
        dim: usize,
        bound: f64,
        limit: f64,
    },

    #[error("quantum runs are restricted to beta >= {min_beta} by default (got {beta}); \
             the semiclassical engine covers smaller beta")]
    DeepQuantum { beta: f64, min_beta: f64 },
}
