//! Truncated number-basis operators for the quantum engine.
//!
//! Conventions: Q = (a + a†)/√2, P = i(a† − a)/√2, so [Q, P] = i on the
//! interior of the truncated basis and the ground-state variances are ½,
//! matching the coherent-state offsets in the semiclassical moment
//! equations. Quantumness enters only through β in the potential (β²Q⁴/4)
//! and the drive (g/β): the well separation grows as 2/β while quantum
//! fluctuations stay O(1).
//!
//! The Hamiltonian is H(t) = H_D + H_R + H_ex with
//!
//! ```text
//! H_D  = P²/2 + β²Q⁴/4 − Q²/2
//! H_R  = (Γ/2)(QP + PQ)
//! H_ex = −(g/β) Q cos(Ωt)
//! ```
//!
//! and the damping channel is L = √Γ (Q + iP) = √(2Γ) a, a zero-temperature
//! Lindblad operator whose dark state is the ground state.
//!
//! All matrices are dense complex N×N, built from exact ladder elements, so
//! Hermiticity of Q, P, Q², Q⁴, QP+PQ is exact by construction. Time
//! stepping uses banded extractions of the same matrices (the static
//! Hamiltonian couples n to n, n±2, n±4 only; Q couples n±1; L and L†L are
//! one-sided/diagonal), which keeps one step O(N) instead of O(N²).

use ndarray::Array2;
use num_complex::Complex64;

use crate::model::SystemParams;
use crate::{Error, Result};

/// Hard cap on the dense operator dimension (memory guard: the full set of
/// dense matrices at this size is ~2.4 GB).
pub const MAX_OPERATOR_DIM: usize = 4096;

/// RK4 covers the imaginary axis up to |λ| dt = 2√2; stay inside with margin
/// because the nonlinear expectation terms add to the spectrum.
pub(crate) const IMAG_STABILITY_LIMIT: f64 = 2.5;

type CMatrix = Array2<Complex64>;

/// The dense operator set for one basis dimension and parameter set, plus
/// the banded forms used by the stepper.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    dim: usize,
    params: SystemParams,
    lowering: CMatrix,
    q: CMatrix,
    p: CMatrix,
    q2: CMatrix,
    q4: CMatrix,
    qp_plus_pq: CMatrix,
    lindblad: CMatrix,
    lindblad_dag_lindblad: CMatrix,
    /// H_D + H_R (time-independent part of H).
    h_static: CMatrix,
    // Banded forms of the stepping operators.
    h_band0: Vec<Complex64>,
    h_band2: Vec<Complex64>,
    h_band4: Vec<Complex64>,
    q_band1: Vec<f64>,
    l_band1: Vec<Complex64>,
    ldl_diag: Vec<f64>,
}

impl OperatorSet {
    /// Build the operator set for an `dim`-level truncation.
    pub fn build(dim: usize, params: &SystemParams) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter {
                name: "dim",
                value: dim as f64,
                reason: "basis needs at least 2 levels",
            });
        }
        if dim > MAX_OPERATOR_DIM {
            return Err(Error::BasisCapacity {
                requested: dim,
                max: MAX_OPERATOR_DIM,
            });
        }
        if params.beta() <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "beta",
                value: params.beta(),
                reason: "quantum operators require beta > 0",
            });
        }

        let mut lowering = CMatrix::zeros((dim, dim));
        for n in 1..dim {
            lowering[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
        }
        let raising = conjugate_transpose(&lowering);
        let inv_sqrt2 = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let q: CMatrix = (&lowering + &raising) * inv_sqrt2;
        let p: CMatrix = (&raising - &lowering) * (inv_sqrt2 * Complex64::i());

        let q2 = q.dot(&q);
        let q4 = q2.dot(&q2);
        let p2 = p.dot(&p);
        let qp_plus_pq = q.dot(&p) + p.dot(&q);

        let sqrt_gamma = Complex64::new(params.gamma().sqrt(), 0.0);
        let lindblad: CMatrix = (&q + &(&p * Complex64::i())) * sqrt_gamma;
        let lindblad_dag = conjugate_transpose(&lindblad);
        let lindblad_dag_lindblad = lindblad_dag.dot(&lindblad);

        let b2 = Complex64::new(params.beta() * params.beta(), 0.0);
        let half = Complex64::new(0.5, 0.0);
        let h_static: CMatrix = &(&p2 * half)
            + &(&(&q4 * (b2 * 0.25)) - &(&q2 * half))
            + &(&qp_plus_pq * Complex64::new(0.5 * params.gamma(), 0.0));

        // Banded extraction: parity restricts the static Hamiltonian to
        // offsets 0, ±2, ±4 and Q to ±1; L is the +1 band; L†L is diagonal.
        let h_band0 = (0..dim).map(|i| h_static[(i, i)]).collect();
        let h_band2 = (0..dim.saturating_sub(2))
            .map(|i| h_static[(i, i + 2)])
            .collect();
        let h_band4 = (0..dim.saturating_sub(4))
            .map(|i| h_static[(i, i + 4)])
            .collect();
        let q_band1 = (0..dim - 1).map(|i| q[(i, i + 1)].re).collect();
        let l_band1 = (0..dim - 1).map(|i| lindblad[(i, i + 1)]).collect();
        let ldl_diag = (0..dim).map(|i| lindblad_dag_lindblad[(i, i)].re).collect();

        let ops = Self {
            dim,
            params: *params,
            lowering,
            q,
            p,
            q2,
            q4,
            qp_plus_pq,
            lindblad,
            lindblad_dag_lindblad,
            h_static,
            h_band0,
            h_band2,
            h_band4,
            q_band1,
            l_band1,
            ldl_diag,
        };
        debug_assert!(ops.off_band_is_zero());
        Ok(ops)
    }

    /// Rebuild at a larger dimension with the same parameters.
    pub fn grown(&self, new_dim: usize) -> Result<Self> {
        Self::build(new_dim, &self.params)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn lowering(&self) -> &CMatrix {
        &self.lowering
    }

    pub fn q(&self) -> &CMatrix {
        &self.q
    }

    pub fn p(&self) -> &CMatrix {
        &self.p
    }

    pub fn q2(&self) -> &CMatrix {
        &self.q2
    }

    pub fn q4(&self) -> &CMatrix {
        &self.q4
    }

    pub fn qp_plus_pq(&self) -> &CMatrix {
        &self.qp_plus_pq
    }

    pub fn lindblad(&self) -> &CMatrix {
        &self.lindblad
    }

    pub fn lindblad_dag_lindblad(&self) -> &CMatrix {
        &self.lindblad_dag_lindblad
    }

    /// H_D + H_R, the time-independent part of the Hamiltonian.
    pub fn h_static(&self) -> &CMatrix {
        &self.h_static
    }

    /// Full Hamiltonian H_D + H_R + H_ex at time `t` (Hermitian).
    pub fn hamiltonian(&self, t: f64) -> CMatrix {
        let c = Complex64::new(-self.params.drive_amplitude() * (self.params.omega() * t).cos(), 0.0);
        &self.h_static + &(&self.q * c)
    }

    /// out = (H_static + drive_factor·Q) ψ, banded.
    pub(crate) fn apply_h(&self, psi: &[Complex64], drive_factor: f64, out: &mut [Complex64]) {
        let n = self.dim;
        debug_assert_eq!(psi.len(), n);
        debug_assert_eq!(out.len(), n);
        let b0 = &self.h_band0;
        let b2 = &self.h_band2;
        let b4 = &self.h_band4;
        let qb = &self.q_band1;
        for i in 0..n {
            let mut acc = b0[i] * psi[i];
            if i + 2 < n {
                acc += b2[i] * psi[i + 2];
            }
            if i >= 2 {
                acc += b2[i - 2].conj() * psi[i - 2];
            }
            if i + 4 < n {
                acc += b4[i] * psi[i + 4];
            }
            if i >= 4 {
                acc += b4[i - 4].conj() * psi[i - 4];
            }
            if i + 1 < n {
                acc += drive_factor * qb[i] * psi[i + 1];
            }
            if i >= 1 {
                acc += drive_factor * qb[i - 1] * psi[i - 1];
            }
            out[i] = acc;
        }
    }

    /// ⟨L⟩ for a (not necessarily normalized) amplitude vector.
    pub(crate) fn lindblad_expectation(&self, psi: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut nrm = 0.0;
        for i in 0..self.dim {
            nrm += psi[i].norm_sqr();
            if i + 1 < self.dim {
                acc += psi[i].conj() * self.l_band1[i] * psi[i + 1];
            }
        }
        acc / nrm
    }

    /// out += factor · (L ψ).
    pub(crate) fn add_lindblad_apply(
        &self,
        psi: &[Complex64],
        factor: Complex64,
        out: &mut [Complex64],
    ) {
        for i in 0..self.dim - 1 {
            out[i] += factor * self.l_band1[i] * psi[i + 1];
        }
    }

    /// Diagonal of L†L (equals 2Γn).
    pub(crate) fn ldl_diag(&self) -> &[f64] {
        &self.ldl_diag
    }

    /// Gershgorin bound on the spectral radius of the stiff deterministic
    /// part −iH − ½L†L, used to reject step sizes outside the RK4 stability
    /// region.
    pub fn spectral_bound(&self) -> f64 {
        let drive = self.params.drive_amplitude();
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            let mut row = self.h_band0[i].norm() + 0.5 * self.ldl_diag[i];
            if i + 2 < n {
                row += self.h_band2[i].norm();
            }
            if i >= 2 {
                row += self.h_band2[i - 2].norm();
            }
            if i + 4 < n {
                row += self.h_band4[i].norm();
            }
            if i >= 4 {
                row += self.h_band4[i - 4].norm();
            }
            if i + 1 < n {
                row += drive * self.q_band1[i];
            }
            if i >= 1 {
                row += drive * self.q_band1[i - 1];
            }
            worst = worst.max(row);
        }
        worst
    }

    /// Reject step sizes for which the top of the basis would be linearly
    /// unstable under the RK4 drift integration.
    pub fn check_step_stability(&self, dt: f64) -> Result<()> {
        let bound = self.spectral_bound();
        if bound * dt > IMAG_STABILITY_LIMIT {
            return Err(Error::UnstableStep {
                dt,
                dim: self.dim,
                bound,
                limit: IMAG_STABILITY_LIMIT,
            });
        }
        Ok(())
    }

    fn off_band_is_zero(&self) -> bool {
        for i in 0..self.dim {
            for j in 0..self.dim {
                let off = i.abs_diff(j);
                if (off % 2 == 1 || off > 4) && self.h_static[(i, j)] != Complex64::ZERO {
                    return false;
                }
            }
        }
        true
    }
}

fn conjugate_transpose(m: &CMatrix) -> CMatrix {
    m.t().mapv(|z| z.conj())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn params() -> SystemParams {
        SystemParams::new(1.0, 0.3, 0.3, 1.0).unwrap()
    }

    fn hermiticity_defect(m: &CMatrix) -> f64 {
        let mut worst = 0.0f64;
        for ((i, j), v) in m.indexed_iter() {
            worst = worst.max((v - m[(j, i)].conj()).norm());
        }
        worst
    }

    #[test]
    fn ladder_elements_are_exact() {
        let ops = OperatorSet::build(8, &params()).unwrap();
        for n in 1..8 {
            assert_eq!(
                ops.lowering()[(n - 1, n)],
                Complex64::new((n as f64).sqrt(), 0.0)
            );
        }
        // ⟨0|Q|1⟩ = 1/√2.
        assert_relative_eq!(
            ops.q()[(0, 1)].re,
            std::f64::consts::FRAC_1_SQRT_2,
            max_relative = 1e-15
        );
        assert_abs_diff_eq!(ops.q()[(0, 1)].im, 0.0);
    }

    #[test]
    fn operators_are_hermitian_by_construction() {
        let ops = OperatorSet::build(32, &params()).unwrap();
        assert_eq!(hermiticity_defect(ops.q()), 0.0);
        assert_eq!(hermiticity_defect(ops.p()), 0.0);
        assert_eq!(hermiticity_defect(ops.q2()), 0.0);
        assert_eq!(hermiticity_defect(ops.q4()), 0.0);
        assert_eq!(hermiticity_defect(ops.qp_plus_pq()), 0.0);
        assert!(hermiticity_defect(&ops.hamiltonian(0.37)) < 1e-12);
    }

    #[test]
    fn commutator_is_i_on_interior_block() {
        let dim = 24;
        let ops = OperatorSet::build(dim, &params()).unwrap();
        let comm = ops.q().dot(ops.p()) - ops.p().dot(ops.q());
        for i in 0..dim - 1 {
            for j in 0..dim - 1 {
                let want = if i == j { Complex64::i() } else { Complex64::ZERO };
                assert!(
                    (comm[(i, j)] - want).norm() < 1e-12,
                    "[Q,P] interior defect at ({i},{j}): {}",
                    comm[(i, j)]
                );
            }
        }
        // Truncation artifact in the corner: [Q,P] = i(1 − N) there.
        assert_relative_eq!(
            comm[(dim - 1, dim - 1)].im,
            1.0 - dim as f64,
            max_relative = 1e-12
        );
    }

    #[test]
    fn lindblad_is_scaled_lowering() {
        // Q + iP = √2 a, so L = √(2Γ) a and the ground state is dark.
        let p = params();
        let ops = OperatorSet::build(16, &p).unwrap();
        let want = (2.0 * p.gamma()).sqrt();
        for n in 1..16 {
            let got = ops.lindblad()[(n - 1, n)];
            assert_relative_eq!(got.re, want * (n as f64).sqrt(), max_relative = 1e-14);
            assert_abs_diff_eq!(got.im, 0.0, epsilon = 1e-15);
        }
        // L|0⟩ = 0: column 0 vanishes.
        for i in 0..16 {
            assert_eq!(ops.lindblad()[(i, 0)], Complex64::ZERO);
        }
        // ⟨n|L†L|n⟩ = 2Γn.
        for n in 0..16 {
            assert_relative_eq!(
                ops.lindblad_dag_lindblad()[(n, n)].re,
                2.0 * p.gamma() * n as f64,
                max_relative = 1e-13,
            );
        }
    }

    #[test]
    fn hamiltonian_term_selection() {
        let p = SystemParams::new(1.0, 0.0, 0.0, 1.0).unwrap();
        let ops = OperatorSet::build(16, &p).unwrap();
        // g = 0, Γ = 0: H = P²/2 + β²Q⁴/4 − Q²/2, time-independent.
        let h0 = ops.hamiltonian(0.0);
        let h1 = ops.hamiltonian(1.234);
        assert_eq!(h0, h1);
        // ⟨0|H_D|0⟩ = 3/16 for β = 1, using ⟨0|Q⁴|0⟩ = 3/4.
        assert_relative_eq!(ops.q4()[(0, 0)].re, 0.75, max_relative = 1e-13);
        assert_relative_eq!(h0[(0, 0)].re, 3.0 / 16.0, max_relative = 1e-12);
    }

    #[test]
    fn drive_vanishes_at_quarter_period() {
        let p = params();
        let ops = OperatorSet::build(12, &p).unwrap();
        let h = ops.hamiltonian(std::f64::consts::FRAC_PI_2);
        let diff = &h - ops.h_static();
        let worst = diff.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        assert!(worst < 1e-12, "H_ex did not vanish at t = π/2Ω: {worst}");
    }

    #[test]
    fn banded_apply_matches_dense() {
        let p = params();
        let ops = OperatorSet::build(40, &p).unwrap();
        let psi: Vec<Complex64> = (0..40)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.73).cos()))
            .collect();
        let t = 0.81;
        let drive_factor = -p.drive_amplitude() * (p.omega() * t).cos();
        let mut banded = vec![Complex64::ZERO; 40];
        ops.apply_h(&psi, drive_factor, &mut banded);
        let dense = ops
            .hamiltonian(t)
            .dot(&ndarray::Array1::from(psi.clone()));
        for i in 0..40 {
            assert!(
                (banded[i] - dense[i]).norm() < 1e-12 * (1.0 + dense[i].norm()),
                "banded/dense mismatch at {i}"
            );
        }
    }

    #[test]
    fn capacity_and_dim_errors() {
        assert!(matches!(
            OperatorSet::build(1, &params()),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(matches!(
            OperatorSet::build(MAX_OPERATOR_DIM + 1, &params()),
            Err(Error::BasisCapacity { .. })
        ));
    }

    #[test]
    fn stability_guard_rejects_coarse_steps() {
        let p = SystemParams::new(0.205, 0.11, 0.3, 1.0).unwrap();
        let ops = OperatorSet::build(223, &p).unwrap();
        // Default step is comfortably stable at this size...
        ops.check_step_stability(std::f64::consts::TAU / 16384.0).unwrap();
        // ...but a 64× coarser one is rejected.
        assert!(matches!(
            ops.check_step_stability(std::f64::consts::TAU / 256.0),
            Err(Error::UnstableStep { .. })
        ));
    }
}
