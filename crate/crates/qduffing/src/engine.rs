//! Uniform dispatch over the three trajectory engines, exposing exactly the
//! surface the complexity and scan machinery needs: default initial
//! conditions, whole-period advancement against a noise stream, centroid
//! extraction, and exact centroid displacement.

use std::fmt;
use std::str::FromStr;

use crate::classical::{self, ClassicalState};
use crate::model::{NumericsConfig, SystemParams};
use crate::noise::NoiseStream;
use crate::quantum::{QsdTrajectory, StepWorkspace};
use crate::semiclassical::{self, SemiclassicalState};
use crate::{Error, Result};

/// Which dynamical engine drives a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    Classical,
    Semiclassical,
    Quantum,
}

impl Model {
    pub const ALL: [Model; 3] = [Model::Classical, Model::Semiclassical, Model::Quantum];

    pub fn as_str(&self) -> &'static str {
        match self {
            Model::Classical => "classical",
            Model::Semiclassical => "semiclassical",
            Model::Quantum => "quantum",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "classical" => Ok(Model::Classical),
            "semiclassical" => Ok(Model::Semiclassical),
            "quantum" => Ok(Model::Quantum),
            other => Err(format!(
                "unknown model `{other}` (expected classical, semiclassical, or quantum)"
            )),
        }
    }
}

/// Engine-specific trajectory state.
#[derive(Debug, Clone)]
pub enum EngineState {
    Classical(ClassicalState),
    Semiclassical {
        state: SemiclassicalState,
        /// Set once a transiently negative variance has been reported.
        spread_warned: bool,
    },
    Quantum(Box<QsdTrajectory>),
}

impl EngineState {
    pub fn t(&self) -> f64 {
        match self {
            EngineState::Classical(s) => s.t,
            EngineState::Semiclassical { state, .. } => state.t,
            EngineState::Quantum(t) => t.state().t(),
        }
    }

    /// (x, p) for point engines, (⟨Q⟩, ⟨P⟩) for the quantum engine.
    pub fn centroid(&self) -> (f64, f64) {
        match self {
            EngineState::Classical(s) => (s.x, s.p),
            EngineState::Semiclassical { state, .. } => (state.x, state.p),
            EngineState::Quantum(t) => t.centroid(),
        }
    }
}

/// One engine bound to a parameter set and numerical configuration.
#[derive(Debug, Clone)]
pub struct Engine {
    model: Model,
    params: SystemParams,
    config: NumericsConfig,
    /// Admit quantum runs below the desk-scale β floor.
    pub allow_deep_quantum: bool,
}

impl Engine {
    pub fn new(model: Model, params: SystemParams, config: NumericsConfig) -> Result<Self> {
        config.validate()?;
        if matches!(model, Model::Quantum) && params.beta() <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "beta",
                value: params.beta(),
                reason: "quantum engine requires beta > 0",
            });
        }
        Ok(Self {
            model,
            params,
            config,
            allow_deep_quantum: false,
        })
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn config(&self) -> &NumericsConfig {
        &self.config
    }

    /// Default initial condition: resting at the right well minimum, with
    /// coherent moments / a coherent wavepacket for the non-classical
    /// engines.
    pub fn initial_state(&self) -> Result<EngineState> {
        if self.params.beta() <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "beta",
                value: self.params.beta(),
                reason: "default initial condition requires beta > 0",
            });
        }
        self.initial_state_at(1.0 / self.params.beta(), 0.0)
    }

    /// Initial condition with an explicit centroid.
    pub fn initial_state_at(&self, x: f64, p: f64) -> Result<EngineState> {
        Ok(match self.model {
            Model::Classical => EngineState::Classical(ClassicalState::new(x, p)),
            Model::Semiclassical => EngineState::Semiclassical {
                state: SemiclassicalState::coherent(x, p),
                spread_warned: false,
            },
            Model::Quantum => {
                let min_beta = if self.allow_deep_quantum {
                    0.0
                } else {
                    crate::quantum::DEFAULT_MIN_BETA
                };
                EngineState::Quantum(Box::new(QsdTrajectory::with_options(
                    &self.params,
                    &self.config,
                    Some((x, p)),
                    min_beta,
                    crate::quantum::DEFAULT_MAX_DIM,
                )?))
            }
        })
    }

    /// Number of noise increments one drive period consumes (the classical
    /// engine is deterministic and consumes none).
    pub fn increments_per_period(&self) -> u64 {
        match self.model {
            Model::Classical => 0,
            Model::Semiclassical | Model::Quantum => self.config.sde_steps_per_period as u64,
        }
    }

    /// Advance by whole drive periods.
    pub fn advance_periods(
        &self,
        state: &mut EngineState,
        n_periods: u32,
        stream: &mut NoiseStream,
    ) -> Result<()> {
        match state {
            EngineState::Classical(s) => {
                classical::advance_periods(s, &self.params, &self.config, n_periods)
            }
            EngineState::Semiclassical {
                state: s,
                spread_warned,
            } => {
                semiclassical::advance_periods(s, &self.params, &self.config, n_periods, stream)?;
                if !*spread_warned && (s.mu < 0.0 || s.kappa < 0.0) {
                    // The truncation can transiently produce negative
                    // variances; clamping would alter the dynamics, so we
                    // only report it.
                    log::warn!(
                        "semiclassical spread went negative at t = {:.3} (mu = {:.3e}, kappa = {:.3e})",
                        s.t,
                        s.mu,
                        s.kappa
                    );
                    *spread_warned = true;
                }
                Ok(())
            }
            EngineState::Quantum(t) => t.advance_periods(n_periods, stream),
        }
    }

    /// Copy of `state` with its centroid displaced by exactly (dx, dp).
    /// For the quantum engine this applies the phase-space displacement
    /// unitary; spreads/amplitudes are otherwise untouched.
    pub fn displace(&self, state: &EngineState, dx: f64, dp: f64) -> Result<EngineState> {
        Ok(match state {
            EngineState::Classical(s) => EngineState::Classical(ClassicalState {
                x: s.x + dx,
                p: s.p + dp,
                t: s.t,
            }),
            EngineState::Semiclassical {
                state: s,
                spread_warned,
            } => EngineState::Semiclassical {
                state: SemiclassicalState {
                    x: s.x + dx,
                    p: s.p + dp,
                    ..*s
                },
                spread_warned: *spread_warned,
            },
            EngineState::Quantum(t) => {
                EngineState::Quantum(Box::new(t.displaced_from(t, dx, dp)?))
            }
        })
    }

    /// Default λ-protocol kick size: 10⁻⁶ of the well scale 1/β for the
    /// point engines, 10⁻⁴ for the quantum engine (the centroid deviation
    /// must stay above expectation-value noise).
    pub fn default_delta0(&self) -> f64 {
        match self.model {
            Model::Classical | Model::Semiclassical => 1e-6 / self.params.beta(),
            Model::Quantum => 1e-4,
        }
    }

    /// One full-width row of trajectory observables for CSV output.
    pub fn observables(&self, state: &EngineState) -> Vec<f64> {
        match state {
            EngineState::Classical(s) => vec![s.t, s.x, s.p],
            EngineState::Semiclassical { state: s, .. } => {
                vec![s.t, s.x, s.p, s.mu, s.kappa, s.r]
            }
            EngineState::Quantum(t) => {
                let o = t.observables();
                vec![
                    o.t,
                    o.q,
                    o.p,
                    o.sigma_qq,
                    o.sigma_pp,
                    o.participation_ratio,
                    o.dim as f64,
                ]
            }
        }
    }

    /// Column names matching [`Engine::observables`].
    pub fn observable_columns(&self) -> &'static [&'static str] {
        match self.model {
            Model::Classical => &["t", "x", "p"],
            Model::Semiclassical => &["t", "x", "p", "mu", "kappa", "r"],
            Model::Quantum => &[
                "t",
                "q_mean",
                "p_mean",
                "sigma_qq",
                "sigma_pp",
                "participation_ratio",
                "basis_dim",
            ],
        }
    }
}

/// Euclidean distance between the centroids of two same-engine states at
/// the same time.
pub fn phase_distance(a: &EngineState, b: &EngineState) -> Result<f64> {
    let (ta, tb) = (a.t(), b.t());
    if ta != tb {
        return Err(Error::TimeMismatch { a: ta, b: tb });
    }
    let (xa, pa) = a.centroid();
    let (xb, pb) = b.centroid();
    Ok((xa - xb).hypot(pa - pb))
}

/// Advance a quantum fiducial/perturbed pair in lockstep with a shared
/// workspace (used by the λ protocol's hot loop).
pub(crate) fn advance_quantum_pair(
    fid: &mut QsdTrajectory,
    per: &mut QsdTrajectory,
    n_periods: u32,
    steps_per_period: u32,
    fid_stream: &mut NoiseStream,
    per_stream: &mut NoiseStream,
) -> Result<()> {
    let mut ws = StepWorkspace::new(fid.dim().max(per.dim()));
    for _ in 0..n_periods {
        for _ in 0..steps_per_period {
            fid.step(&mut ws, fid_stream)?;
            per.step(&mut ws, per_stream)?;
        }
    }
    Ok(())
}
