//! Lyapunov exponents and dynamical complexity K = λ + Γ via a shared
//! reset-and-average protocol.
//!
//! A fiducial trajectory and a perturbed copy (created by a small random
//! kick) are evolved with identical noise realizations. At every reset
//! boundary the centroid distance d is logged as a rate ln(d/δ₀)/T and the
//! perturbed state is replaced by the fiducial state displaced by δ₀ along
//! the current deviation direction, which keeps the pair inside the linear
//! deviation regime. λ is the time average of those rates after the
//! transient, averaged over noise realizations.
//!
//! λ is reported in natural-log units per unit time so that K = λ + Γ
//! compares like with like: phase-space volumes contract at the rate 2Γ, and
//! the chaos criterion K > Γ is then exactly λ > 0.

use rayon::prelude::*;

use crate::engine::{phase_distance, Engine, EngineState, Model};
use crate::model::SystemParams;
use crate::noise::{derive_seed, NoiseStream};
use crate::{Error, Result};

/// Salt tags separating the per-realization noise and kick sub-streams.
const NOISE_SALT: u64 = 0x6e6f_6973_65;
const KICK_SALT: u64 = 0x6b69_636b;

/// Protocol knobs for one λ estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovProtocol {
    /// Initial phase-space separation; `None` selects the engine default
    /// (10⁻⁶/β for the point engines, 10⁻⁴ for the quantum engine).
    pub delta0: Option<f64>,
    /// Reset interval in whole drive periods.
    pub reset_periods: u32,
    /// Total drive periods per realization (including the transient).
    pub n_periods: u32,
    /// Independent noise realizations averaged over.
    pub n_realizations: u32,
    /// Periods discarded before rates accumulate.
    pub transient_periods: u32,
}

impl Default for LyapunovProtocol {
    /// 3000 periods, 100 transient, 8 realizations, per-period resets.
    fn default() -> Self {
        Self {
            delta0: None,
            reset_periods: 1,
            n_periods: 3000,
            n_realizations: 8,
            transient_periods: 100,
        }
    }
}

impl LyapunovProtocol {
    /// Desk-scale quantum default: 500 periods (λ's sign and magnitude
    /// stabilize well before 3000 on these attractors, and quantum runs
    /// dominate cost).
    pub fn quantum_default() -> Self {
        Self {
            n_periods: 500,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(d) = self.delta0 {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "delta0",
                    value: d,
                    reason: "must be positive and finite",
                });
            }
        }
        if self.reset_periods == 0 {
            return Err(Error::InvalidParameter {
                name: "reset_periods",
                value: 0.0,
                reason: "must be at least one period",
            });
        }
        if self.n_realizations == 0 {
            return Err(Error::InvalidParameter {
                name: "n_realizations",
                value: 0.0,
                reason: "must be at least one realization",
            });
        }
        if self.n_periods <= self.transient_periods {
            return Err(Error::InvalidParameter {
                name: "n_periods",
                value: self.n_periods as f64,
                reason: "must exceed transient_periods",
            });
        }
        Ok(())
    }
}

/// A λ estimate with the protocol metadata that produced it.
#[derive(Debug, Clone)]
pub struct LyapunovEstimate {
    pub model: Model,
    pub params: SystemParams,
    pub protocol: LyapunovProtocol,
    pub base_seed: u64,
    /// Mean exponential separation rate (natural log, per unit time).
    pub lambda: f64,
    /// K = λ + Γ.
    pub k: f64,
    /// Standard error of λ across realizations (0 for a single realization).
    pub stderr: f64,
    /// Per-realization λ values, in realization order.
    pub per_realization: Vec<f64>,
    /// Total reset intervals accumulated.
    pub resets: u64,
    /// Times the perturbation collapsed to zero and was re-kicked.
    pub rekicks: u64,
    /// The δ₀ actually used.
    pub delta0: f64,
}

/// K = λ + Γ.
pub fn complexity(lambda: f64, gamma: f64) -> f64 {
    lambda + gamma
}

/// Displace `state` by δ₀ in a uniformly random phase-space direction.
pub fn perturb(
    engine: &Engine,
    state: &EngineState,
    delta0: f64,
    directions: &mut NoiseStream,
) -> Result<EngineState> {
    if delta0 == 0.0 {
        return Ok(state.clone());
    }
    let theta = random_angle(directions)?;
    engine.displace(state, delta0 * theta.cos(), delta0 * theta.sin())
}

fn random_angle(stream: &mut NoiseStream) -> Result<f64> {
    // Angle of a unit-variance complex Gaussian is uniform on [0, 2π).
    let z = stream.next_increment(2.0)?;
    Ok(z.im.atan2(z.re))
}

struct RealizationOutcome {
    lambda: f64,
    resets: u64,
    rekicks: u64,
}

fn run_realization(
    engine: &Engine,
    protocol: &LyapunovProtocol,
    delta0: f64,
    noise_seed: u64,
    kick_seed: u64,
) -> Result<RealizationOutcome> {
    let period = engine.params().period();
    let reset_time = protocol.reset_periods as f64 * period;
    let mut stream = NoiseStream::new(noise_seed);
    let mut kicks = NoiseStream::new(kick_seed);

    let mut fid = engine.initial_state()?;
    engine.advance_periods(&mut fid, protocol.transient_periods, &mut stream)?;

    // The perturbed trajectory consumes the identical noise realization
    // through a fork taken at the kick time.
    let mut per_stream = stream.fork();
    let mut per = perturb(engine, &fid, delta0, &mut kicks)?;

    let intervals = (protocol.n_periods - protocol.transient_periods) / protocol.reset_periods;
    let mut acc = 0.0;
    let mut measured = 0u64;
    let mut rekicks = 0u64;

    for _ in 0..intervals {
        advance_pair(
            engine,
            &mut fid,
            &mut per,
            protocol.reset_periods,
            &mut stream,
            &mut per_stream,
        )?;
        let d = phase_distance(&fid, &per)?;
        if d == 0.0 {
            // The perturbation died (identical centroids); log it and
            // restart from a fresh random direction.
            log::warn!(
                "perturbation collapsed at t = {:.3}; re-kicking",
                fid.t()
            );
            rekicks += 1;
            per = perturb(engine, &fid, delta0, &mut kicks)?;
            continue;
        }
        acc += (d / delta0).ln() / reset_time;
        measured += 1;
        // Reset: fiducial displaced by δ₀ along the deviation direction.
        let (xf, pf) = fid.centroid();
        let (xp, pp) = per.centroid();
        let scale = delta0 / d;
        per = engine.displace(&fid, (xp - xf) * scale, (pp - pf) * scale)?;
    }

    if measured == 0 {
        return Err(Error::InvalidParameter {
            name: "n_periods",
            value: protocol.n_periods as f64,
            reason: "no reset intervals survived; perturbation collapsed every interval",
        });
    }
    Ok(RealizationOutcome {
        lambda: acc / measured as f64,
        resets: measured,
        rekicks,
    })
}

fn advance_pair(
    engine: &Engine,
    fid: &mut EngineState,
    per: &mut EngineState,
    n_periods: u32,
    fid_stream: &mut NoiseStream,
    per_stream: &mut NoiseStream,
) -> Result<()> {
    // Quantum pairs share one scratch workspace per interval; the point
    // engines are cheap enough to advance independently.
    if let (EngineState::Quantum(f), EngineState::Quantum(p)) = (&mut *fid, &mut *per) {
        return crate::engine::advance_quantum_pair(
            f,
            p,
            n_periods,
            engine.config().sde_steps_per_period,
            fid_stream,
            per_stream,
        );
    }
    engine.advance_periods(fid, n_periods, fid_stream)?;
    engine.advance_periods(per, n_periods, per_stream)
}

/// Estimate λ and K for one engine/parameter point.
///
/// Realization r draws its noise stream from `derive_seed(base_seed, [r,
/// NOISE])` and its kick directions from `derive_seed(base_seed, [r,
/// KICK])`, so the estimate is a pure function of `(engine, protocol,
/// base_seed)` regardless of thread count.
pub fn lyapunov_estimate(
    engine: &Engine,
    protocol: &LyapunovProtocol,
    base_seed: u64,
) -> Result<LyapunovEstimate> {
    protocol.validate()?;
    let delta0 = protocol.delta0.unwrap_or_else(|| engine.default_delta0());

    let outcomes: Vec<Result<RealizationOutcome>> = (0..protocol.n_realizations)
        .into_par_iter()
        .map(|r| {
            run_realization(
                engine,
                protocol,
                delta0,
                derive_seed(base_seed, &[r as u64, NOISE_SALT]),
                derive_seed(base_seed, &[r as u64, KICK_SALT]),
            )
        })
        .collect();

    let mut lambdas = Vec::with_capacity(outcomes.len());
    let mut resets = 0u64;
    let mut rekicks = 0u64;
    for outcome in outcomes {
        let o = outcome?;
        lambdas.push(o.lambda);
        resets += o.resets;
        rekicks += o.rekicks;
    }

    let n = lambdas.len() as f64;
    let lambda = lambdas.iter().sum::<f64>() / n;
    let stderr = if lambdas.len() > 1 {
        let var = lambdas.iter().map(|l| (l - lambda).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };

    Ok(LyapunovEstimate {
        model: engine.model(),
        params: *engine.params(),
        protocol: *protocol,
        base_seed,
        lambda,
        k: complexity(lambda, engine.params().gamma()),
        stderr,
        per_realization: lambdas,
        resets,
        rekicks,
        delta0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NumericsConfig;

    fn engine(model: Model, gamma: f64) -> Engine {
        let params = SystemParams::new(0.25, gamma, 0.3, 1.0).unwrap();
        Engine::new(model, params, NumericsConfig::default()).unwrap()
    }

    fn fast_protocol(n_periods: u32, n_realizations: u32) -> LyapunovProtocol {
        LyapunovProtocol {
            n_periods,
            n_realizations,
            transient_periods: 50,
            ..LyapunovProtocol::default()
        }
    }

    #[test]
    fn complexity_arithmetic() {
        assert_eq!(complexity(-0.05, 0.05), 0.0);
        assert_eq!(complexity(0.1, 0.05), 0.15000000000000002);
        // K > Γ exactly when λ > 0.
        assert!(complexity(1e-9, 0.3) > 0.3);
        assert!(complexity(-1e-9, 0.3) < 0.3);
    }

    #[test]
    fn zero_kick_is_identity() {
        let e = engine(Model::Classical, 0.1);
        let s = e.initial_state().unwrap();
        let mut dirs = NoiseStream::new(1);
        let p = perturb(&e, &s, 0.0, &mut dirs).unwrap();
        assert_eq!(phase_distance(&s, &p).unwrap(), 0.0);
    }

    #[test]
    fn kick_lands_at_requested_distance() {
        let e = engine(Model::Classical, 0.1);
        let s = e.initial_state().unwrap();
        for seed in 0..5 {
            let mut dirs = NoiseStream::new(seed);
            let p = perturb(&e, &s, 1e-6, &mut dirs).unwrap();
            let d = phase_distance(&s, &p).unwrap();
            assert!((d - 1e-6).abs() < 1e-18, "distance {d}");
        }
    }

    #[test]
    fn quantum_kick_is_unitary_and_exact() {
        let params = SystemParams::new(0.5, 0.2, 0.3, 1.0).unwrap();
        let e = Engine::new(Model::Quantum, params, NumericsConfig::default()).unwrap();
        let s = e.initial_state().unwrap();
        let mut dirs = NoiseStream::new(3);
        let p = perturb(&e, &s, 1e-4, &mut dirs).unwrap();
        let d = phase_distance(&s, &p).unwrap();
        assert!((d - 1e-4).abs() / 1e-4 < 1e-6, "distance {d}");
        if let EngineState::Quantum(t) = &p {
            assert!((t.state().norm() - 1.0).abs() < 1e-12);
        } else {
            unreachable!()
        }
    }

    #[test]
    fn estimate_is_reproducible_bitwise() {
        let e = engine(Model::Semiclassical, 0.13);
        let protocol = LyapunovProtocol {
            n_periods: 60,
            transient_periods: 10,
            n_realizations: 2,
            ..LyapunovProtocol::default()
        };
        let a = lyapunov_estimate(&e, &protocol, 42).unwrap();
        let b = lyapunov_estimate(&e, &protocol, 42).unwrap();
        assert_eq!(a.lambda.to_bits(), b.lambda.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
        assert_eq!(a.per_realization, b.per_realization);
        // And a different seed gives a different λ.
        let c = lyapunov_estimate(&e, &protocol, 43).unwrap();
        assert_ne!(a.lambda.to_bits(), c.lambda.to_bits());
    }

    #[test]
    fn k_definition_holds_exactly() {
        let e = engine(Model::Classical, 0.13);
        let est = lyapunov_estimate(&e, &fast_protocol(200, 2), 7).unwrap();
        assert_eq!(est.k, est.lambda + 0.13);
        assert!(est.stderr >= 0.0);
        assert!(est.lambda.is_finite());
        assert_eq!(est.resets, 2 * 150);
    }

    #[test]
    fn classical_chaotic_band_has_positive_lambda() {
        let e = engine(Model::Classical, 0.13);
        let est = lyapunov_estimate(&e, &fast_protocol(400, 2), 11).unwrap();
        assert!(
            est.lambda > 0.05,
            "expected chaos at Γ=0.13, got λ = {}",
            est.lambda
        );
    }

    #[test]
    fn classical_regular_orbit_contracts_at_gamma() {
        let e = engine(Model::Classical, 0.05);
        let est = lyapunov_estimate(&e, &fast_protocol(400, 2), 11).unwrap();
        assert!(
            (est.lambda + 0.05).abs() < 0.02,
            "expected λ ≈ −Γ on the periodic orbit, got {}",
            est.lambda
        );
    }

    #[test]
    fn protocol_validation() {
        assert!(LyapunovProtocol::default().validate().is_ok());
        assert!(
            LyapunovProtocol {
                delta0: Some(-1.0),
                ..LyapunovProtocol::default()
            }
            .validate()
            .is_err()
        );
        assert!(
            LyapunovProtocol {
                n_periods: 50,
                transient_periods: 100,
                ..LyapunovProtocol::default()
            }
            .validate()
            .is_err()
        );
        assert!(
            LyapunovProtocol {
                n_realizations: 0,
                ..LyapunovProtocol::default()
            }
            .validate()
            .is_err()
        );
    }
}
