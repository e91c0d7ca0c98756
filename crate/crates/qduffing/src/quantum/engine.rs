//! The quantum-state-diffusion step and trajectory runner.
//!
//! One Itô step applies
//!
//! ```text
//! |dψ⟩ = −iH(t)|ψ⟩ dt
//!      + (⟨L†⟩L − ½L†L − ½⟨L†⟩⟨L⟩)|ψ⟩ dt
//!      + (L − ⟨L⟩)|ψ⟩ dξ
//! ```
//!
//! followed by renormalization. The deterministic drift (both lines with
//! dt) is integrated with classical RK4 stages rather than a single Euler
//! increment: the drift spectrum is dominated by −iH whose largest
//! eigenvalues sit on the imaginary axis at |λ| ≈ β²N²·O(1) for an N-level
//! basis, and forward Euler is unconditionally unstable there — at the
//! default step the empty top of the basis self-amplifies within a fraction
//! of a drive period. RK4's stability region covers the imaginary axis up
//! to |λ|dt = 2√2, which the operator set's `check_step_stability` enforces.
//! The noise increment keeps its Euler–Maruyama form, evaluated at the step
//! start, so the Itô interpretation and the one-increment-per-step contract
//! are unchanged.

use std::sync::Arc;

use num_complex::Complex64;

use crate::model::{NumericsConfig, SystemParams};
use crate::noise::NoiseStream;
use crate::quantum::operators::OperatorSet;
use crate::quantum::state::QuantumState;
use crate::{Error, Result};

/// Default basis growth ratio.
pub const DEFAULT_GROWTH_FACTOR: f64 = 1.5;

/// Default ceiling for on-demand basis growth.
pub const DEFAULT_MAX_DIM: usize = 4096;

/// Quantum runs below this β are refused by default: their basis sizes put
/// them out of desk scale, and the semiclassical engine covers that regime.
pub const DEFAULT_MIN_BETA: f64 = 0.1;

/// Initial basis dimension ⌈8/β²⌉ + 32: the coherent state at the well has
/// mean level 1/(2β²), and chaotic excursions reach roughly twice the well
/// amplitude, so this leaves generous headroom before growth triggers.
pub fn initial_dim(beta: f64) -> usize {
    assert!(beta > 0.0);
    (8.0 / (beta * beta)).ceil() as usize + 32
}

/// Scratch buffers for the RK4 stages, reused across steps.
#[derive(Debug, Clone)]
pub struct StepWorkspace {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    stage: Vec<Complex64>,
    out: Vec<Complex64>,
}

impl StepWorkspace {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![Complex64::ZERO; dim],
            k2: vec![Complex64::ZERO; dim],
            k3: vec![Complex64::ZERO; dim],
            k4: vec![Complex64::ZERO; dim],
            stage: vec![Complex64::ZERO; dim],
            out: vec![Complex64::ZERO; dim],
        }
    }

    fn resize(&mut self, dim: usize) {
        for buf in [
            &mut self.k1,
            &mut self.k2,
            &mut self.k3,
            &mut self.k4,
            &mut self.stage,
            &mut self.out,
        ] {
            buf.resize(dim, Complex64::ZERO);
        }
    }
}

/// Deterministic QSD drift at time `t` into `out`; returns ⟨L⟩ of `psi`.
fn drift(
    ops: &OperatorSet,
    psi: &[Complex64],
    t: f64,
    out: &mut [Complex64],
) -> Complex64 {
    let params = ops.params();
    let drive_factor = -params.drive_amplitude() * (params.omega() * t).cos();
    ops.apply_h(psi, drive_factor, out);
    let e_l = ops.lindblad_expectation(psi);
    let half_abs = 0.5 * e_l.norm_sqr();
    let ldl = ops.ldl_diag();
    for i in 0..psi.len() {
        out[i] = -Complex64::i() * out[i] - (0.5 * ldl[i] + half_abs) * psi[i];
    }
    ops.add_lindblad_apply(psi, e_l.conj(), out);
    e_l
}

fn step_into(
    ws: &mut StepWorkspace,
    state: &mut QuantumState,
    ops: &OperatorSet,
    increment: Complex64,
    dt: f64,
    renormalize: bool,
) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::BadTimeStep(dt));
    }
    let dim = state.dim();
    ws.resize(dim);
    let t = state.t();
    let psi = state.amplitudes_slice();

    // RK4 stages of the deterministic drift.
    let e_l = drift(ops, psi, t, &mut ws.k1);
    for i in 0..dim {
        ws.stage[i] = psi[i] + 0.5 * dt * ws.k1[i];
    }
    drift(ops, &ws.stage, t + 0.5 * dt, &mut ws.k2);
    for i in 0..dim {
        ws.stage[i] = psi[i] + 0.5 * dt * ws.k2[i];
    }
    drift(ops, &ws.stage, t + 0.5 * dt, &mut ws.k3);
    for i in 0..dim {
        ws.stage[i] = psi[i] + dt * ws.k3[i];
    }
    drift(ops, &ws.stage, t + dt, &mut ws.k4);

    let sixth = dt / 6.0;
    for i in 0..dim {
        ws.out[i] = psi[i]
            + sixth * (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i])
            - e_l * increment * psi[i];
    }
    // + L ψ dξ (the −⟨L⟩ψ dξ part is folded in above).
    ops.add_lindblad_apply(psi, increment, &mut ws.out);

    state.set_from(&ws.out, t + dt);
    if renormalize {
        state.renormalize()?;
    } else {
        let n = state.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::NonFinite {
                t: state.t(),
                context: "quantum state norm",
            });
        }
    }
    Ok(())
}

/// One QSD step with an externally supplied increment. Convenience wrapper
/// that allocates its own stage buffers; trajectory loops should use
/// [`QsdTrajectory`] instead.
pub fn qsd_step_with(
    state: &QuantumState,
    ops: &OperatorSet,
    increment: Complex64,
    dt: f64,
    renormalize: bool,
) -> Result<QuantumState> {
    if state.dim() != ops.dim() {
        return Err(Error::DimensionMismatch {
            state_dim: state.dim(),
            op_dim: ops.dim(),
        });
    }
    let mut ws = StepWorkspace::new(state.dim());
    let mut next = state.clone();
    step_into(&mut ws, &mut next, ops, increment, dt, renormalize)?;
    Ok(next)
}

/// One QSD step; consumes exactly one complex increment from the stream.
pub fn qsd_step(
    state: &QuantumState,
    ops: &OperatorSet,
    stream: &mut NoiseStream,
    dt: f64,
    renormalize: bool,
) -> Result<QuantumState> {
    let increment = stream.next_increment(dt)?;
    qsd_step_with(state, ops, increment, dt, renormalize)
}

/// Zero-pad the state into a basis `factor` times larger and rebuild the
/// operators; expectation values are unchanged.
pub fn grow_basis(
    state: &QuantumState,
    ops: &OperatorSet,
    factor: f64,
    max_dim: usize,
) -> Result<(QuantumState, OperatorSet)> {
    assert!(factor > 1.0, "growth factor must exceed 1");
    let new_dim = ((state.dim() as f64 * factor).ceil() as usize).max(state.dim() + 8);
    if new_dim > max_dim {
        return Err(Error::BasisCapacity {
            requested: new_dim,
            max: max_dim,
        });
    }
    let new_ops = ops.grown(new_dim)?;
    Ok((state.grown(new_dim), new_ops))
}

/// Stroboscopic observables of a quantum trajectory.
#[derive(Debug, Clone, Copy)]
pub struct QuantumObservables {
    pub t: f64,
    pub q: f64,
    pub p: f64,
    pub sigma_qq: f64,
    pub sigma_pp: f64,
    pub participation_ratio: f64,
    pub dim: usize,
}

/// A QSD trajectory: the evolving state, its operator set (shared until a
/// basis growth forces a rebuild), and the growth/stability policy.
#[derive(Debug, Clone)]
pub struct QsdTrajectory {
    state: QuantumState,
    ops: Arc<OperatorSet>,
    config: NumericsConfig,
    dt: f64,
    max_dim: usize,
    growth_factor: f64,
}

impl QsdTrajectory {
    /// Trajectory from the default initial condition: a coherent state
    /// resting at the right well minimum (+1/β, 0).
    pub fn new(params: &SystemParams, config: &NumericsConfig) -> Result<Self> {
        Self::with_options(params, config, None, DEFAULT_MIN_BETA, DEFAULT_MAX_DIM)
    }

    /// Trajectory from an explicit centroid.
    pub fn from_centroid(
        params: &SystemParams,
        config: &NumericsConfig,
        x: f64,
        p: f64,
    ) -> Result<Self> {
        Self::with_options(params, config, Some((x, p)), DEFAULT_MIN_BETA, DEFAULT_MAX_DIM)
    }

    /// Full-control constructor: `min_beta = 0` admits deep-quantum runs
    /// that are otherwise refused as beyond desk scale.
    pub fn with_options(
        params: &SystemParams,
        config: &NumericsConfig,
        centroid: Option<(f64, f64)>,
        min_beta: f64,
        max_dim: usize,
    ) -> Result<Self> {
        config.validate()?;
        if params.beta() <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "beta",
                value: params.beta(),
                reason: "quantum engine requires beta > 0",
            });
        }
        if params.beta() < min_beta {
            return Err(Error::DeepQuantum {
                beta: params.beta(),
                min_beta,
            });
        }
        let (x, p) = centroid.unwrap_or((1.0 / params.beta(), 0.0));
        let mut dim = initial_dim(params.beta()).min(max_dim);
        // The coherent tail may demand more levels than the β-based default
        // when starting far from the wells.
        let state = loop {
            match QuantumState::coherent(dim, x, p, config.basis_tail_tolerance) {
                Ok(s) => break s,
                Err(Error::CoherentTail { suggested, .. }) if suggested <= max_dim => {
                    dim = suggested;
                }
                Err(e) => return Err(e),
            }
        };
        let ops = OperatorSet::build(dim, params)?;
        let dt = config.sde_dt(params);
        ops.check_step_stability(dt)?;
        Ok(Self {
            state,
            ops: Arc::new(ops),
            config: *config,
            dt,
            max_dim,
            growth_factor: DEFAULT_GROWTH_FACTOR,
        })
    }

    /// Replace the perturbed trajectory with a displaced copy of `other`
    /// (same basis, same time, centroid moved by (dx, dp)).
    pub fn displaced_from(&self, other: &QsdTrajectory, dx: f64, dp: f64) -> Result<Self> {
        let state = other.state.displace(dx, dp)?;
        Ok(Self {
            state,
            ops: Arc::clone(&other.ops),
            ..other.clone()
        })
    }

    pub fn state(&self) -> &QuantumState {
        &self.state
    }

    pub fn ops(&self) -> &OperatorSet {
        &self.ops
    }

    pub fn dim(&self) -> usize {
        self.state.dim()
    }

    pub fn centroid(&self) -> (f64, f64) {
        self.state.centroid()
    }

    pub fn observables(&self) -> QuantumObservables {
        let (q, p, sigma_qq, sigma_pp) = self.state.centroid_and_variances();
        QuantumObservables {
            t: self.state.t(),
            q,
            p,
            sigma_qq,
            sigma_pp,
            participation_ratio: self.state.participation_ratio(),
            dim: self.state.dim(),
        }
    }

    /// One step; grows the basis (rebuilding operators) whenever the tail
    /// mass exceeds the configured tolerance.
    pub fn step(&mut self, ws: &mut StepWorkspace, stream: &mut NoiseStream) -> Result<()> {
        let increment = stream.next_increment(self.dt)?;
        step_into(
            ws,
            &mut self.state,
            &self.ops,
            increment,
            self.dt,
            self.config.renormalize_each_step,
        )?;
        if self.state.tail_mass() > self.config.basis_tail_tolerance {
            let (state, ops) = grow_basis(
                &self.state,
                &self.ops,
                self.growth_factor,
                self.max_dim,
            )?;
            ops.check_step_stability(self.dt)?;
            log::debug!(
                "basis grown to {} levels at t = {:.3}",
                ops.dim(),
                state.t()
            );
            self.state = state;
            self.ops = Arc::new(ops);
        }
        Ok(())
    }

    /// Advance by whole drive periods, consuming `sde_steps_per_period`
    /// increments per period.
    pub fn advance_periods(&mut self, n_periods: u32, stream: &mut NoiseStream) -> Result<()> {
        let mut ws = StepWorkspace::new(self.dim());
        for _ in 0..n_periods {
            for _ in 0..self.config.sde_steps_per_period {
                self.step(&mut ws, stream)?;
            }
        }
        Ok(())
    }
}
