//! Deterministic integration of the classical double-well equation and its
//! tangent (variational) flow.
//!
//! The flow is
//!
//! ```text
//! dx/dt = p
//! dp/dt = −2Γp − β²x³ + x + (g/β) cos(Ωt)
//! ```
//!
//! integrated with fixed-step classical RK4. The step is always T/n for
//! integer n, so stroboscopic samples at t = 2nπ/Ω land on exact step
//! boundaries. The tangent flow under the Jacobian
//! `[[0, 1], [1 − 3β²x², −2Γ]]` provides the reference Lyapunov exponents
//! against which the trajectory-resampling estimator is validated; its trace
//! −2Γ fixes the exponent sum.

use crate::model::{NumericsConfig, SystemParams};
use crate::{Error, Result};

/// Phase point of the classical engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalState {
    pub x: f64,
    pub p: f64,
    pub t: f64,
}

impl ClassicalState {
    pub fn new(x: f64, p: f64) -> Self {
        Self { x, p, t: 0.0 }
    }
}

/// Linearized deviation evolved alongside a fiducial trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentVector {
    pub dx: f64,
    pub dp: f64,
}

impl TangentVector {
    pub fn norm(&self) -> f64 {
        self.dx.hypot(self.dp)
    }
}

/// Default initial condition: resting at the right well minimum (+1/β, 0).
pub fn default_initial(params: &SystemParams) -> ClassicalState {
    assert!(params.beta() > 0.0, "default initial condition requires beta > 0");
    ClassicalState::new(1.0 / params.beta(), 0.0)
}

/// (dx/dt, dp/dt) of the flow at `state`.
pub fn derivative(state: &ClassicalState, params: &SystemParams) -> (f64, f64) {
    let force = params.force(state.x);
    (
        state.p,
        -2.0 * params.gamma() * state.p + force + params.forcing(state.t),
    )
}

#[inline]
fn accel(x: f64, p: f64, t: f64, params: &SystemParams) -> f64 {
    -2.0 * params.gamma() * p + params.force(x) + params.forcing(t)
}

fn guard(state: &ClassicalState, params: &SystemParams) -> Result<()> {
    if !(state.x.is_finite() && state.p.is_finite()) {
        return Err(Error::NonFinite {
            t: state.t,
            context: "classical state",
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

/// One fixed RK4 substep of length `dt` (local error O(dt⁵)).
pub fn step_deterministic(
    state: &ClassicalState,
    params: &SystemParams,
    dt: f64,
) -> Result<ClassicalState> {
    let (next, _) = step_with_tangents(state, &[], params, dt)?;
    Ok(next)
}

/// Evolve one linearized deviation over one substep, using the Jacobian
/// along the fiducial RK4 stages.
pub fn tangent_step(
    state: &ClassicalState,
    v: &TangentVector,
    params: &SystemParams,
    dt: f64,
) -> Result<TangentVector> {
    let (_, vs) = step_with_tangents(state, &[*v], params, dt)?;
    Ok(vs[0])
}

/// RK4 substep of the fiducial point together with any number of tangent
/// vectors; the tangents see the Jacobian evaluated at the fiducial stage
/// points, so fiducial and tangent integrations are mutually consistent.
pub fn step_with_tangents(
    state: &ClassicalState,
    tangents: &[TangentVector],
    params: &SystemParams,
    dt: f64,
) -> Result<(ClassicalState, Vec<TangentVector>)> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::BadTimeStep(dt));
    }
    let b2 = params.beta() * params.beta();
    let gamma = params.gamma();
    let (x0, p0, t0) = (state.x, state.p, state.t);

    // Fiducial stages.
    let k1x = p0;
    let k1p = accel(x0, p0, t0, params);
    let (x1, p1) = (x0 + 0.5 * dt * k1x, p0 + 0.5 * dt * k1p);
    let k2x = p1;
    let k2p = accel(x1, p1, t0 + 0.5 * dt, params);
    let (x2, p2) = (x0 + 0.5 * dt * k2x, p0 + 0.5 * dt * k2p);
    let k3x = p2;
    let k3p = accel(x2, p2, t0 + 0.5 * dt, params);
    let (x3, p3) = (x0 + dt * k3x, p0 + dt * k3p);
    let k4x = p3;
    let k4p = accel(x3, p3, t0 + dt, params);

    let next = ClassicalState {
        x: x0 + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
        p: p0 + dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
        t: t0 + dt,
    };
    guard(&next, params)?;

    // Jacobian d(dp/dt)/dx = 1 − 3β²x² at each stage position.
    let j1 = 1.0 - 3.0 * b2 * x0 * x0;
    let j2 = 1.0 - 3.0 * b2 * x1 * x1;
    let j3 = 1.0 - 3.0 * b2 * x2 * x2;
    let j4 = 1.0 - 3.0 * b2 * x3 * x3;

    let evolved = tangents
        .iter()
        .map(|v| {
            let (dx0, dp0) = (v.dx, v.dp);
            let l1x = dp0;
            let l1p = j1 * dx0 - 2.0 * gamma * dp0;
            let (dx1, dp1) = (dx0 + 0.5 * dt * l1x, dp0 + 0.5 * dt * l1p);
            let l2x = dp1;
            let l2p = j2 * dx1 - 2.0 * gamma * dp1;
            let (dx2, dp2) = (dx0 + 0.5 * dt * l2x, dp0 + 0.5 * dt * l2p);
            let l3x = dp2;
            let l3p = j3 * dx2 - 2.0 * gamma * dp2;
            let (dx3, dp3) = (dx0 + dt * l3x, dp0 + dt * l3p);
            let l4x = dp3;
            let l4p = j4 * dx3 - 2.0 * gamma * dp3;
            TangentVector {
                dx: dx0 + dt / 6.0 * (l1x + 2.0 * l2x + 2.0 * l3x + l4x),
                dp: dp0 + dt / 6.0 * (l1p + 2.0 * l2p + 2.0 * l3p + l4p),
            }
        })
        .collect();

    Ok((next, evolved))
}

/// Advance a state by `n_periods` whole drive periods.
pub fn advance_periods(
    state: &mut ClassicalState,
    params: &SystemParams,
    config: &NumericsConfig,
    n_periods: u32,
) -> Result<()> {
    let dt = config.deterministic_dt(params);
    for _ in 0..n_periods {
        for _ in 0..config.steps_per_period {
            *state = step_deterministic(state, params, dt)?;
        }
    }
    Ok(())
}

/// Both Lyapunov exponents from the full tangent flow, via per-period
/// Gram–Schmidt reorthonormalization of two deviation vectors.
#[derive(Debug, Clone, Copy)]
pub struct TangentExponents {
    pub lambda1: f64,
    pub lambda2: f64,
}

/// Benettin-style tangent-flow estimate over `n_periods` drive periods,
/// discarding `transient_periods` before accumulating. This is the
/// oracle the resampling estimator is checked against.
pub fn tangent_lyapunov(
    params: &SystemParams,
    config: &NumericsConfig,
    initial: ClassicalState,
    n_periods: u32,
    transient_periods: u32,
) -> Result<TangentExponents> {
    assert!(n_periods > transient_periods);
    let dt = config.deterministic_dt(params);
    let period = params.period();
    let mut state = initial;
    let mut v1 = TangentVector { dx: 1.0, dp: 0.0 };
    let mut v2 = TangentVector { dx: 0.0, dp: 1.0 };
    let mut acc1 = 0.0;
    let mut acc2 = 0.0;
    let mut measured = 0u32;

    for period_idx in 0..n_periods {
        for _ in 0..config.steps_per_period {
            let (next, vs) = step_with_tangents(&state, &[v1, v2], params, dt)?;
            state = next;
            v1 = vs[0];
            v2 = vs[1];
        }
        // Gram–Schmidt: r1 = |v1|, r2 = |v2 ⊥ v1|.
        let r1 = v1.norm();
        v1 = TangentVector {
            dx: v1.dx / r1,
            dp: v1.dp / r1,
        };
        let proj = v2.dx * v1.dx + v2.dp * v1.dp;
        v2 = TangentVector {
            dx: v2.dx - proj * v1.dx,
            dp: v2.dp - proj * v1.dp,
        };
        let r2 = v2.norm();
        v2 = TangentVector {
            dx: v2.dx / r2,
            dp: v2.dp / r2,
        };
        if period_idx >= transient_periods {
            acc1 += r1.ln();
            acc2 += r2.ln();
            measured += 1;
        }
    }
    let denom = measured as f64 * period;
    Ok(TangentExponents {
        lambda1: acc1 / denom,
        lambda2: acc2 / denom,
    })
}
