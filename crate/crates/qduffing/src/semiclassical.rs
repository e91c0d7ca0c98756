//! Second-order moment-truncated stochastic dynamics for the centroid
//! (x, p) and spreads (μ, κ, R).
//!
//! The evolved system is
//!
//! ```text
//! dx = p dt + 2√Γ ((μ − ½) dξ_R − R dξ_I)
//! dp = (−β²(x³ + 3μx) + x − 2Γp + (g/β) cos Ωt) dt + 2√Γ (R dξ_R − (κ − ½) dξ_I)
//! dμ/dt = 2R + 2Γ(μ − μ² − R² + ¼)
//! dκ/dt = 2R(−3β²x² + 1) + 2Γ(−κ − κ² − R² + ¼)
//! dR/dt = μ(−3β²x² + 1) + κ − 2ΓR(μ + κ)
//! ```
//!
//! with μ = σ_QQ, κ = σ_PP, R = (σ_QP + σ_PQ)/2. Only the centroid receives
//! noise; the spread variables are deterministic given the centroid path.
//! Interpreted in the Itô sense, stepped with a Heun predictor-corrector on
//! the drift and Euler–Maruyama on the noise (the stiff cubic terms at small
//! β want the extra drift stability). Each step consumes exactly one complex
//! increment.

use num_complex::Complex64;

use crate::model::{NumericsConfig, SystemParams};
use crate::noise::NoiseStream;
use crate::{Error, Result};

/// Centroid plus second moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemiclassicalState {
    /// Centroid position ⟨Q⟩.
    pub x: f64,
    /// Centroid momentum ⟨P⟩.
    pub p: f64,
    /// Position variance σ_QQ.
    pub mu: f64,
    /// Momentum variance σ_PP.
    pub kappa: f64,
    /// Symmetrized covariance (σ_QP + σ_PQ)/2.
    pub r: f64,
    pub t: f64,
}

impl SemiclassicalState {
    /// State with the given centroid and coherent (minimum-uncertainty)
    /// moments μ = κ = ½, R = 0, where the centroid noise coefficients
    /// vanish.
    pub fn coherent(x: f64, p: f64) -> Self {
        Self {
            x,
            p,
            mu: 0.5,
            kappa: 0.5,
            r: 0.0,
            t: 0.0,
        }
    }

    /// The conserved combination R² − μκ of the undamped β = 0 limit.
    pub fn moment_invariant(&self) -> f64 {
        self.r * self.r - self.mu * self.kappa
    }
}

/// Default initial condition: coherent state resting at the right well
/// minimum.
pub fn default_initial(params: &SystemParams) -> SemiclassicalState {
    assert!(params.beta() > 0.0, "default initial condition requires beta > 0");
    SemiclassicalState::coherent(1.0 / params.beta(), 0.0)
}

/// Deterministic drift (dx, dp, dμ, dκ, dR)/dt.
pub fn drift(state: &SemiclassicalState, params: &SystemParams) -> [f64; 5] {
    let b2 = params.beta() * params.beta();
    let gamma = params.gamma();
    let (x, p, mu, kappa, r) = (state.x, state.p, state.mu, state.kappa, state.r);
    let curvature = 1.0 - 3.0 * b2 * x * x; // −3β²x² + 1
    [
        p,
        -b2 * (x * x * x + 3.0 * mu * x) + x - 2.0 * gamma * p + params.forcing(state.t),
        2.0 * r + 2.0 * gamma * (mu - mu * mu - r * r + 0.25),
        2.0 * r * curvature + 2.0 * gamma * (-kappa - kappa * kappa - r * r + 0.25),
        mu * curvature + kappa - 2.0 * gamma * r * (mu + kappa),
    ]
}

/// The 2×2 matrix mapping (dξ_R, dξ_I) onto the centroid increments
/// (dx, dp). Rows are (dx, dp), columns are (dξ_R, dξ_I). The spread
/// variables receive no noise.
pub fn noise_coefficients(state: &SemiclassicalState, params: &SystemParams) -> [[f64; 2]; 2] {
    let s = 2.0 * params.gamma().sqrt();
    [
        [s * (state.mu - 0.5), -s * state.r],
        [s * state.r, -s * (state.kappa - 0.5)],
    ]
}

fn guard(state: &SemiclassicalState, params: &SystemParams) -> Result<()> {
    let finite = state.x.is_finite()
        && state.p.is_finite()
        && state.mu.is_finite()
        && state.kappa.is_finite()
        && state.r.is_finite();
    if !finite {
        return Err(Error::NonFinite {
            t: state.t,
            context: "semiclassical state",
        });
    }
    let radius = params.escape_radius();
    if state.x.abs() > radius {
        return Err(Error::TrajectoryEscaped {
            t: state.t,
            x: state.x,
            guard: radius,
        });
    }
    Ok(())
}

/// One step with an externally supplied increment (used by lockstep
/// fiducial/perturbed pairs and convergence studies).
pub fn step_sde_with(
    state: &SemiclassicalState,
    params: &SystemParams,
    increment: Complex64,
    dt: f64,
) -> Result<SemiclassicalState> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::BadTimeStep(dt));
    }
    let coeff = noise_coefficients(state, params);
    let (dxi_r, dxi_i) = (increment.re, increment.im);
    let noise_x = coeff[0][0] * dxi_r + coeff[0][1] * dxi_i;
    let noise_p = coeff[1][0] * dxi_r + coeff[1][1] * dxi_i;

    let f0 = drift(state, params);
    let predictor = SemiclassicalState {
        x: state.x + dt * f0[0] + noise_x,
        p: state.p + dt * f0[1] + noise_p,
        mu: state.mu + dt * f0[2],
        kappa: state.kappa + dt * f0[3],
        r: state.r + dt * f0[4],
        t: state.t + dt,
    };
    let f1 = drift(&predictor, params);
    let next = SemiclassicalState {
        x: state.x + 0.5 * dt * (f0[0] + f1[0]) + noise_x,
        p: state.p + 0.5 * dt * (f0[1] + f1[1]) + noise_p,
        mu: state.mu + 0.5 * dt * (f0[2] + f1[2]),
        kappa: state.kappa + 0.5 * dt * (f0[3] + f1[3]),
        r: state.r + 0.5 * dt * (f0[4] + f1[4]),
        t: state.t + dt,
    };
    guard(&next, params)?;
    Ok(next)
}

/// One stochastic step; consumes exactly one complex increment from the
/// stream.
pub fn step_sde(
    state: &SemiclassicalState,
    params: &SystemParams,
    stream: &mut NoiseStream,
    dt: f64,
) -> Result<SemiclassicalState> {
    let increment = stream.next_increment(dt)?;
    step_sde_with(state, params, increment, dt)
}

/// Advance by whole drive periods, consuming `sde_steps_per_period`
/// increments per period.
pub fn advance_periods(
    state: &mut SemiclassicalState,
    params: &SystemParams,
    config: &NumericsConfig,
    n_periods: u32,
    stream: &mut NoiseStream,
) -> Result<()> {
    let dt = config.sde_dt(params);
    for _ in 0..n_periods {
        for _ in 0..config.sde_steps_per_period {
            *state = step_sde(state, params, stream, dt)?;
        }
    }
    Ok(())
}
