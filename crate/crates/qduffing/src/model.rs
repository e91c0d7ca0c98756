//! Dimensionless system parameters, the double-well potential, and the
//! scale-invariance transform shared by all three engines.
//!
//! The working units are the scaled ones in which the equation of motion is
//!
//! ```text
//! x'' + 2 Γ x' + β² x³ − x = (g/β) cos(Ω t)
//! ```
//!
//! so every quantity here is dimensionless. `beta` plays the role of an
//! effective Planck constant: the well minima sit at x = ±1/β while quantum
//! fluctuations stay O(1), so small `beta` is the classical limit.

use crate::{Error, Result};

/// Dimensionless parameter set (β, Γ, g, Ω) shared by all engines.
///
/// Invariants enforced at construction: `beta > 0` (or `beta == 0` in the
/// undriven `g == 0` limit used by moment-conservation studies), `gamma >= 0`,
/// `g >= 0`, `omega > 0`, all finite.
///
/// Note on the drive frequency: all stroboscopic procedures in this crate
/// record at t = 2nπ, i.e. they assume Ω = 1 so the drive period is 2π.
/// Ω is configurable but defaults to 1.0, and the analyses use the actual
/// period T = 2π/Ω throughout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    beta: f64,
    gamma: f64,
    g: f64,
    omega: f64,
}

impl Default for SystemParams {
    /// β = 0.25, Γ = 0.1, g = 0.3, Ω = 1.0.
    fn default() -> Self {
        Self {
            beta: 0.25,
            gamma: 0.1,
            g: 0.3,
            omega: 1.0,
        }
    }
}

impl SystemParams {
    pub fn new(beta: f64, gamma: f64, g: f64, omega: f64) -> Result<Self> {
        let check = |name, value: f64| -> Result<f64> {
            if value.is_finite() {
                Ok(value)
            } else {
                Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite",
                })
            }
        };
        let beta = check("beta", beta)?;
        let gamma = check("gamma", gamma)?;
        let g = check("g", g)?;
        let omega = check("omega", omega)?;
        if beta < 0.0 {
            return Err(Error::InvalidParameter {
                name: "beta",
                value: beta,
                reason: "must be positive",
            });
        }
        if beta == 0.0 && g != 0.0 {
            return Err(Error::InvalidParameter {
                name: "beta",
                value: beta,
                reason: "beta = 0 is only meaningful for the undriven (g = 0) limit",
            });
        }
        if gamma < 0.0 {
            return Err(Error::InvalidParameter {
                name: "gamma",
                value: gamma,
                reason: "must be non-negative",
            });
        }
        if g < 0.0 {
            return Err(Error::InvalidParameter {
                name: "g",
                value: g,
                reason: "must be non-negative",
            });
        }
        if omega <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "omega",
                value: omega,
                reason: "must be positive",
            });
        }
        Ok(Self {
            beta,
            gamma,
            g,
            omega,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Same parameters with a different dissipation rate.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.beta, gamma, self.g, self.omega)
    }

    /// Same parameters with a different effective Planck scale.
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(beta, self.gamma, self.g, self.omega)
    }

    /// Drive period T = 2π/Ω.
    pub fn period(&self) -> f64 {
        std::f64::consts::TAU / self.omega
    }

    /// Drive amplitude g/β, with the convention 0/0 = 0 for the undriven
    /// β = 0 limit.
    pub fn drive_amplitude(&self) -> f64 {
        if self.g == 0.0 {
            0.0
        } else {
            self.g / self.beta
        }
    }

    /// (g/β) cos(Ω t).
    pub fn forcing(&self, t: f64) -> f64 {
        self.drive_amplitude() * (self.omega * t).cos()
    }

    /// Double-well potential V(x) = β² x⁴/4 − x²/2.
    pub fn potential(&self, x: f64) -> f64 {
        let b2 = self.beta * self.beta;
        0.25 * b2 * x.powi(4) - 0.5 * x * x
    }

    /// Conservative force −V'(x) = −β² x³ + x.
    pub fn force(&self, x: f64) -> f64 {
        x - self.beta * self.beta * x.powi(3)
    }

    /// The two stationary points of V other than x = 0, i.e. the nonzero
    /// roots of β² x³ − x = 0, returned as (−1/β, +1/β).
    ///
    /// Panics if `beta == 0` (the wells recede to infinity).
    pub fn well_minima(&self) -> (f64, f64) {
        assert!(self.beta > 0.0, "well_minima requires beta > 0");
        (-1.0 / self.beta, 1.0 / self.beta)
    }

    /// Divergence guard radius: the physical attractors live within a few
    /// well widths, so |x| beyond 100/β means the parameters or step size
    /// are wrong. Infinite when β = 0.
    pub fn escape_radius(&self) -> f64 {
        100.0 / self.beta
    }
}

/// The scale invariance of the equation of motion: for any Λ > 0,
/// (x, p, β) → (x/Λ, p/Λ, Λβ) maps trajectories onto trajectories.
pub fn rescale(
    x: f64,
    p: f64,
    params: &SystemParams,
    lambda: f64,
) -> Result<(f64, f64, SystemParams)> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "lambda",
            value: lambda,
            reason: "must be a positive finite scale factor",
        });
    }
    let rescaled = SystemParams::new(
        lambda * params.beta,
        params.gamma,
        params.g,
        params.omega,
    )?;
    Ok((x / lambda, p / lambda, rescaled))
}

/// Numerical configuration shared by the engines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericsConfig {
    /// Deterministic substeps per drive period (classical engine). >= 64.
    pub steps_per_period: u32,
    /// Stochastic substeps per drive period (semiclassical and quantum
    /// engines). >= 1024.
    pub sde_steps_per_period: u32,
    /// Probability mass allowed in the top 10% of basis levels before the
    /// quantum engine grows its basis. In (0, 1e-4].
    pub basis_tail_tolerance: f64,
    /// Renormalize the quantum state after every step.
    pub renormalize_each_step: bool,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            steps_per_period: 4096,
            sde_steps_per_period: 16384,
            basis_tail_tolerance: 1e-6,
            renormalize_each_step: true,
        }
    }
}

impl NumericsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps_per_period < 64 {
            return Err(Error::InvalidParameter {
                name: "steps_per_period",
                value: self.steps_per_period as f64,
                reason: "must be at least 64",
            });
        }
        if self.sde_steps_per_period < 1024 {
            return Err(Error::InvalidParameter {
                name: "sde_steps_per_period",
                value: self.sde_steps_per_period as f64,
                reason: "must be at least 1024",
            });
        }
        if !(self.basis_tail_tolerance > 0.0 && self.basis_tail_tolerance <= 1e-4) {
            return Err(Error::InvalidParameter {
                name: "basis_tail_tolerance",
                value: self.basis_tail_tolerance,
                reason: "must lie in (0, 1e-4]",
            });
        }
        Ok(())
    }

    /// Deterministic step dt = T / steps_per_period.
    pub fn deterministic_dt(&self, params: &SystemParams) -> f64 {
        params.period() / self.steps_per_period as f64
    }

    /// Stochastic step dt = T / sde_steps_per_period.
    pub fn sde_dt(&self, params: &SystemParams) -> f64 {
        params.period() / self.sde_steps_per_period as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    #[test]
    fn potential_at_origin_is_zero() {
        let p = SystemParams::default();
        assert_eq!(p.potential(0.0), 0.0);
    }

    #[test]
    fn potential_at_well_minimum() {
        // V(1/β) = −1/(4β²), from the nonzero root of β²x³ − x = 0.
        for beta in [0.25, 1.0, 0.01] {
            let p = SystemParams::new(beta, 0.1, 0.3, 1.0).unwrap();
            let x = 1.0 / beta;
            assert_relative_eq!(p.potential(x), -1.0 / (4.0 * beta * beta), max_relative = 1e-12);
            assert_relative_eq!(p.potential(-x), p.potential(x), max_relative = 1e-14);
        }
    }

    #[test]
    fn well_minima_are_roots_of_the_force() {
        for beta in [0.25, 1.0, 0.01] {
            let p = SystemParams::new(beta, 0.1, 0.3, 1.0).unwrap();
            let (lo, hi) = p.well_minima();
            assert_relative_eq!(hi, 1.0 / beta, max_relative = 1e-12);
            assert_eq!(lo, -hi);
            assert_abs_diff_eq!(p.force(hi) * beta, 0.0, epsilon = 1e-12);
        }
        let p = SystemParams::new(0.25, 0.1, 0.3, 1.0).unwrap();
        assert_eq!(p.well_minima(), (-4.0, 4.0));
    }

    #[test]
    fn rescale_matches_invariance_statement() {
        let p = SystemParams::new(0.1, 0.13, 0.3, 1.0).unwrap();
        let (x, pp, q) = rescale(4.0, 0.0, &p, 2.0).unwrap();
        assert_eq!((x, pp), (2.0, 0.0));
        assert_relative_eq!(q.beta(), 0.2, max_relative = 1e-15);
        // Λ = 1 is the identity.
        let (x, pp, q) = rescale(4.0, -1.5, &p, 1.0).unwrap();
        assert_eq!((x, pp), (4.0, -1.5));
        assert_eq!(q.beta(), p.beta());
    }

    #[test]
    fn rescale_rejects_bad_scale() {
        let p = SystemParams::default();
        assert!(rescale(1.0, 0.0, &p, 0.0).is_err());
        assert!(rescale(1.0, 0.0, &p, -2.0).is_err());
        assert!(rescale(1.0, 0.0, &p, f64::NAN).is_err());
    }

    #[test]
    fn invalid_params_are_rejected() {
        assert!(SystemParams::new(-0.1, 0.1, 0.3, 1.0).is_err());
        assert!(SystemParams::new(0.0, 0.1, 0.3, 1.0).is_err()); // β=0 needs g=0
        assert!(SystemParams::new(0.0, 0.1, 0.0, 1.0).is_ok()); // undriven limit
        assert!(SystemParams::new(0.25, -0.1, 0.3, 1.0).is_err());
        assert!(SystemParams::new(0.25, 0.1, -0.3, 1.0).is_err());
        assert!(SystemParams::new(0.25, 0.1, 0.3, 0.0).is_err());
        assert!(SystemParams::new(f64::NAN, 0.1, 0.3, 1.0).is_err());
    }

    #[test]
    fn config_validation() {
        let ok = NumericsConfig::default();
        ok.validate().unwrap();
        assert!(
            NumericsConfig {
                steps_per_period: 32,
                ..ok
            }
            .validate()
            .is_err()
        );
        assert!(
            NumericsConfig {
                sde_steps_per_period: 512,
                ..ok
            }
            .validate()
            .is_err()
        );
        assert!(
            NumericsConfig {
                basis_tail_tolerance: 1e-3,
                ..ok
            }
            .validate()
            .is_err()
        );
    }

    #[test]
    fn undriven_beta_zero_forcing_is_zero() {
        let p = SystemParams::new(0.0, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(p.drive_amplitude(), 0.0);
        assert_eq!(p.forcing(0.0), 0.0);
        assert!(p.escape_radius().is_infinite());
    }

    proptest! {
        #[test]
        fn potential_is_even(x in -50.0f64..50.0, beta in 0.01f64..2.0) {
            let p = SystemParams::new(beta, 0.1, 0.3, 1.0).unwrap();
            prop_assert!((p.potential(x) - p.potential(-x)).abs() <= 1e-12 * p.potential(x).abs().max(1.0));
        }

        #[test]
        fn rescale_roundtrips(
            x in -10.0f64..10.0,
            p in -10.0f64..10.0,
            beta in 0.01f64..2.0,
            lambda in 0.05f64..20.0,
        ) {
            let params = SystemParams::new(beta, 0.1, 0.3, 1.0).unwrap();
            let (x1, p1, q) = rescale(x, p, &params, lambda).unwrap();
            let (x2, p2, r) = rescale(x1, p1, &q, 1.0 / lambda).unwrap();
            prop_assert!((x2 - x).abs() <= 1e-12 * x.abs().max(1.0));
            prop_assert!((p2 - p).abs() <= 1e-12 * p.abs().max(1.0));
            prop_assert!((r.beta() - beta).abs() <= 1e-12 * beta);
        }
    }
}
