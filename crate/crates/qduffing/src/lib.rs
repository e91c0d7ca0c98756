//! Trajectory engines and chaos diagnostics for the open, driven,
//! dissipative double-well (Duffing) oscillator across the
//! quantum-to-classical transition.
//!
//! Three interoperable engines evolve the same dimensionless system
//! x'' + 2Γx' + β²x³ − x = (g/β)cos(Ωt):
//!
//! * [`classical`] — deterministic RK4 integration of the point dynamics
//!   plus the tangent (variational) flow;
//! * [`semiclassical`] — the second-order moment truncation: stochastic
//!   centroid (x, p) coupled to deterministic spreads (μ, κ, R);
//! * [`quantum`] — quantum-state-diffusion trajectories of the full wave
//!   function in a truncated, growable number basis, driven by the same
//!   complex Wiener increments.
//!
//! On top of the engines sit the shared analyses: the Lyapunov/complexity
//! protocol ([`lyapunov`], K = λ + Γ), and bifurcation / Poincaré /
//! K-vs-Γ scans ([`scans`]) with CSV/SVG emission ([`output`]).
//!
//! Everything is seeded and deterministic: a run is a pure function of its
//! parameters and base seed, independent of thread count.

pub mod classical;
pub mod engine;
mod error;
pub mod lyapunov;
pub mod model;
pub mod noise;
pub mod output;
pub mod quantum;
pub mod scans;
pub mod semiclassical;

pub use engine::{Engine, EngineState, Model};
pub use error::Error;
pub use model::{rescale, NumericsConfig, SystemParams};
pub use noise::{derive_seed, NoiseStream};

pub type Result<T> = std::result::Result<T, Error>;
