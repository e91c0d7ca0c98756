//! Figure-style procedures: bifurcation diagrams, Poincaré sections, and
//! K-vs-Γ sweeps.
//!
//! Every grid cell derives its own seed from the scan's base seed by stable
//! integer hashing, so cells are embarrassingly parallel, individually
//! re-runnable, and the merged output is independent of worker count.
//! No initial-condition continuation is used across grids: each cell starts
//! fresh from the default initial condition, which avoids hysteresis
//! artifacts.

use rayon::prelude::*;

use crate::engine::{Engine, Model};
use crate::lyapunov::{lyapunov_estimate, LyapunovEstimate, LyapunovProtocol};
use crate::model::{NumericsConfig, SystemParams};
use crate::noise::{derive_seed, NoiseStream};
use crate::{Error, Result};

/// Salt tags for per-cell seed derivation.
const BIFURCATION_SALT: u64 = 0x6269_66;
const POINCARE_SALT: u64 = 0x706f_69;
const KMAP_SALT: u64 = 0x6b6d_6170;

/// Inclusive Γ grid from `min` to `max` in steps of `step`.
pub fn gamma_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite() && min.is_finite() && max >= min) {
        return Err(Error::InvalidParameter {
            name: "gamma_step",
            value: step,
            reason: "grid needs max >= min and a positive step",
        });
    }
    let n = ((max - min) / step + 0.5).floor() as usize + 1;
    Ok((0..n).map(|i| min + i as f64 * step).collect())
}

/// Stroboscopic (x, p) points recorded once per drive period at t = 2nπ/Ω.
#[derive(Debug, Clone)]
pub struct PoincareSection {
    pub model: Model,
    pub params: SystemParams,
    pub seed: u64,
    /// Ordered stroboscopic points (expectation values for the quantum and
    /// semiclassical engines), one per recorded period.
    pub points: Vec<(f64, f64)>,
}

/// Record the stroboscopic map for `n_periods` periods, discarding the
/// first `discard` as transient. Sampling times are exact period multiples
/// because the integrators take an integer number of substeps per period.
pub fn poincare_section(
    model: Model,
    params: &SystemParams,
    config: &NumericsConfig,
    n_periods: u32,
    discard: u32,
    seed: u64,
) -> Result<PoincareSection> {
    if n_periods <= discard {
        return Err(Error::InvalidParameter {
            name: "n_periods",
            value: n_periods as f64,
            reason: "must exceed the discarded transient",
        });
    }
    let engine = Engine::new(model, *params, *config)?;
    let mut stream = NoiseStream::new(derive_seed(seed, &[POINCARE_SALT]));
    let mut state = engine.initial_state()?;
    engine.advance_periods(&mut state, discard, &mut stream)?;
    let mut points = Vec::with_capacity((n_periods - discard) as usize);
    for _ in discard..n_periods {
        engine.advance_periods(&mut state, 1, &mut stream)?;
        points.push(state.centroid());
    }
    Ok(PoincareSection {
        model,
        params: *params,
        seed,
        points,
    })
}

/// One Γ cell of a bifurcation scan: the stroboscopic x values of periods
/// `discard+1 ..= periods`, or the error that interrupted the cell.
#[derive(Debug, Clone)]
pub struct BifurcationCell {
    pub gamma: f64,
    pub seed: u64,
    pub outcome: std::result::Result<Vec<f64>, String>,
}

/// Stroboscopic x against Γ.
#[derive(Debug, Clone)]
pub struct BifurcationScan {
    pub model: Model,
    pub params_template: SystemParams,
    pub base_seed: u64,
    pub periods: u32,
    pub discard: u32,
    pub cells: Vec<BifurcationCell>,
}

/// For each Γ on the grid, evolve the default initial condition over
/// `periods` drive periods, discard the first `discard`, and record all
/// remaining stroboscopic x values. Failed cells are marked and the scan
/// continues.
#[allow(clippy::too_many_arguments)]
pub fn bifurcation_scan(
    model: Model,
    params_template: &SystemParams,
    config: &NumericsConfig,
    gamma_min: f64,
    gamma_max: f64,
    gamma_step: f64,
    periods: u32,
    discard: u32,
    base_seed: u64,
) -> Result<BifurcationScan> {
    if periods <= discard {
        return Err(Error::InvalidParameter {
            name: "periods",
            value: periods as f64,
            reason: "must exceed the discarded transient",
        });
    }
    let grid = gamma_grid(gamma_min, gamma_max, gamma_step)?;
    let cells: Vec<BifurcationCell> = grid
        .par_iter()
        .enumerate()
        .map(|(idx, &gamma)| {
            let seed = derive_seed(base_seed, &[BIFURCATION_SALT, idx as u64]);
            let outcome = run_bifurcation_cell(
                model,
                params_template,
                config,
                gamma,
                periods,
                discard,
                seed,
            )
            .map_err(|e| e.to_string());
            BifurcationCell {
                gamma,
                seed,
                outcome,
            }
        })
        .collect();
    Ok(BifurcationScan {
        model,
        params_template: *params_template,
        base_seed,
        periods,
        discard,
        cells,
    })
}

fn run_bifurcation_cell(
    model: Model,
    params_template: &SystemParams,
    config: &NumericsConfig,
    gamma: f64,
    periods: u32,
    discard: u32,
    seed: u64,
) -> Result<Vec<f64>> {
    let params = params_template.with_gamma(gamma)?;
    let engine = Engine::new(model, params, *config)?;
    let mut stream = NoiseStream::new(seed);
    let mut state = engine.initial_state()?;
    engine.advance_periods(&mut state, discard, &mut stream)?;
    let mut xs = Vec::with_capacity((periods - discard) as usize);
    for _ in discard..periods {
        engine.advance_periods(&mut state, 1, &mut stream)?;
        xs.push(state.centroid().0);
    }
    Ok(xs)
}

/// One (model, β, Γ) cell of a complexity map.
#[derive(Debug, Clone)]
pub struct KmapCell {
    pub model: Model,
    pub beta: f64,
    pub gamma: f64,
    pub seed: u64,
    pub outcome: std::result::Result<LyapunovEstimate, String>,
}

/// Grid of λ/K estimates over (model, β) × Γ.
#[derive(Debug, Clone)]
pub struct ComplexityMap {
    pub base_seed: u64,
    pub protocol: LyapunovProtocol,
    /// Cells in grid order: series-major, Γ-minor.
    pub cells: Vec<KmapCell>,
}

/// K-vs-Γ sweep for a list of (model, β) series over a Γ grid. Cells run
/// concurrently; each derives its seed from `(base_seed, series index, Γ
/// index)`; the output ordering is grid order regardless of completion
/// order. Per-cell failures are recorded and the sweep completes.
///
/// `allow_deep_quantum` lifts the desk-scale β ≥ 0.1 restriction on
/// quantum cells (smaller β is normally covered by the semiclassical
/// engine).
#[allow(clippy::too_many_arguments)]
pub fn k_vs_gamma_sweep(
    series: &[(Model, f64)],
    params_template: &SystemParams,
    config: &NumericsConfig,
    gammas: &[f64],
    protocol: &LyapunovProtocol,
    base_seed: u64,
    allow_deep_quantum: bool,
) -> Result<ComplexityMap> {
    protocol.validate()?;
    let cells_spec: Vec<(usize, usize, Model, f64, f64)> = series
        .iter()
        .enumerate()
        .flat_map(|(si, &(model, beta))| {
            gammas
                .iter()
                .enumerate()
                .map(move |(gi, &gamma)| (si, gi, model, beta, gamma))
        })
        .collect();

    let cells: Vec<KmapCell> = cells_spec
        .par_iter()
        .map(|&(si, gi, model, beta, gamma)| {
            let seed = derive_seed(base_seed, &[KMAP_SALT, si as u64, gi as u64]);
            let outcome = run_kmap_cell(
                model,
                beta,
                gamma,
                params_template,
                config,
                protocol,
                seed,
                allow_deep_quantum,
            )
            .map_err(|e| e.to_string());
            KmapCell {
                model,
                beta,
                gamma,
                seed,
                outcome,
            }
        })
        .collect();

    Ok(ComplexityMap {
        base_seed,
        protocol: *protocol,
        cells,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_kmap_cell(
    model: Model,
    beta: f64,
    gamma: f64,
    params_template: &SystemParams,
    config: &NumericsConfig,
    protocol: &LyapunovProtocol,
    seed: u64,
    allow_deep_quantum: bool,
) -> Result<LyapunovEstimate> {
    let params = SystemParams::new(beta, gamma, params_template.g(), params_template.omega())?;
    let mut engine = Engine::new(model, params, *config)?;
    engine.allow_deep_quantum = allow_deep_quantum;
    lyapunov_estimate(&engine, protocol, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fast_config() -> NumericsConfig {
        NumericsConfig {
            steps_per_period: 512,
            sde_steps_per_period: 1024,
            ..NumericsConfig::default()
        }
    }

    #[test]
    fn grid_is_inclusive_and_uniform() {
        let g = gamma_grid(0.01, 0.30, 0.001).unwrap();
        assert_eq!(g.len(), 291);
        assert_eq!(g[0], 0.01);
        assert!((g[290] - 0.30).abs() < 1e-12);
        assert!(gamma_grid(0.3, 0.1, 0.01).is_err());
    }

    #[test]
    fn poincare_counts_and_determinism() {
        let params = SystemParams::new(0.25, 0.11, 0.3, 1.0).unwrap();
        let a = poincare_section(Model::Classical, &params, &fast_config(), 40, 10, 5).unwrap();
        assert_eq!(a.points.len(), 30);
        let b = poincare_section(Model::Classical, &params, &fast_config(), 40, 10, 5).unwrap();
        assert_eq!(a.points, b.points);
    }

    #[test]
    fn regular_window_collapses_to_few_points() {
        // Γ = 0.11 sits in a regular window: after transients the
        // stroboscopic map lands on (nearly) one point.
        let params = SystemParams::new(0.25, 0.11, 0.3, 1.0).unwrap();
        let config = NumericsConfig::default();
        let s = poincare_section(Model::Classical, &params, &config, 80, 40, 5).unwrap();
        let (x0, p0) = s.points[s.points.len() - 1];
        for &(x, p) in s.points.iter().skip(s.points.len() - 10) {
            assert!((x - x0).hypot(p - p0) < 1e-3, "spread too large");
        }
    }

    #[test]
    fn bifurcation_cells_record_expected_counts() {
        let params = SystemParams::default();
        let scan = bifurcation_scan(
            Model::Classical,
            &params,
            &fast_config(),
            0.05,
            0.07,
            0.01,
            30,
            10,
            9,
        )
        .unwrap();
        assert_eq!(scan.cells.len(), 3);
        for cell in &scan.cells {
            let xs = cell.outcome.as_ref().expect("cell failed");
            assert_eq!(xs.len(), 20);
        }
    }

    #[test]
    fn sweep_is_deterministic_and_cell_rerunnable() {
        let params = SystemParams::default();
        let protocol = LyapunovProtocol {
            n_periods: 30,
            transient_periods: 10,
            n_realizations: 2,
            ..LyapunovProtocol::default()
        };
        let gammas = gamma_grid(0.05, 0.13, 0.08).unwrap();
        let series = [(Model::Classical, 0.25), (Model::Semiclassical, 0.25)];
        let mapize = |m: &ComplexityMap| -> Vec<(u64, u64)> {
            m.cells
                .iter()
                .map(|c| {
                    let e = c.outcome.as_ref().unwrap();
                    (e.lambda.to_bits(), c.seed)
                })
                .collect()
        };
        let a = k_vs_gamma_sweep(&series, &params, &fast_config(), &gammas, &protocol, 42, false)
            .unwrap();
        let b = k_vs_gamma_sweep(&series, &params, &fast_config(), &gammas, &protocol, 42, false)
            .unwrap();
        assert_eq!(mapize(&a), mapize(&b));

        // Re-run one cell standalone from its recorded seed.
        let cell = &a.cells[3];
        let engine = Engine::new(
            cell.model,
            SystemParams::new(cell.beta, cell.gamma, params.g(), params.omega()).unwrap(),
            fast_config(),
        )
        .unwrap();
        let redo = lyapunov_estimate(&engine, &protocol, cell.seed).unwrap();
        assert_eq!(
            redo.lambda.to_bits(),
            cell.outcome.as_ref().unwrap().lambda.to_bits()
        );
    }

    #[test]
    fn sweep_records_failures_without_aborting() {
        let params = SystemParams::default();
        let protocol = LyapunovProtocol {
            n_periods: 20,
            transient_periods: 5,
            n_realizations: 1,
            ..LyapunovProtocol::default()
        };
        // β below the desk-scale floor: the quantum cells must fail while
        // the classical series completes.
        let series = [(Model::Quantum, 0.01), (Model::Classical, 0.25)];
        let gammas = [0.05, 0.13];
        let map =
            k_vs_gamma_sweep(&series, &params, &fast_config(), &gammas, &protocol, 1, false)
                .unwrap();
        assert_eq!(map.cells.len(), 4);
        assert!(map.cells[0].outcome.is_err());
        assert!(map.cells[1].outcome.is_err());
        assert!(map.cells[2].outcome.is_ok());
        assert!(map.cells[3].outcome.is_ok());
    }
}
