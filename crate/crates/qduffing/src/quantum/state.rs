//! Pure-state amplitude vectors in the truncated number basis:
//! construction, expectation values, small phase-space displacements, and
//! basis bookkeeping.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::{Error, Result};

/// Normalized amplitude vector |ψ⟩ with its time tag.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amplitudes: Array1<Complex64>,
    t: f64,
}

impl QuantumState {
    /// Wrap raw amplitudes (normalizing them) at t = 0.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::InvalidParameter {
                name: "dim",
                value: amplitudes.len() as f64,
                reason: "state needs at least 2 levels",
            });
        }
        let mut state = Self {
            amplitudes: Array1::from(amplitudes),
            t: 0.0,
        };
        let n = state.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::NonFinite {
                t: 0.0,
                context: "state amplitudes",
            });
        }
        state.scale(1.0 / n);
        Ok(state)
    }

    /// |0⟩ in an `dim`-level basis.
    pub fn ground(dim: usize) -> Self {
        let mut amplitudes = Array1::zeros(dim);
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Self { amplitudes, t: 0.0 }
    }

    /// Coherent state with centroid (⟨Q⟩, ⟨P⟩) = (x, p): amplitudes
    /// c_n = e^{−|α|²/2} αⁿ/√n! with α = (x + ip)/√2.
    ///
    /// Fails with a suggested dimension when the truncated tail would carry
    /// more than `tail_tolerance` of the probability mass.
    pub fn coherent(dim: usize, x: f64, p: f64, tail_tolerance: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter {
                name: "dim",
                value: dim as f64,
                reason: "state needs at least 2 levels",
            });
        }
        let alpha = Complex64::new(x, p) * std::f64::consts::FRAC_1_SQRT_2;
        let mut amplitudes = Array1::zeros(dim);
        amplitudes[0] = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
        for n in 1..dim {
            amplitudes[n] = amplitudes[n - 1] * alpha / (n as f64).sqrt();
        }
        let state = Self { amplitudes, t: 0.0 };
        let n2 = state.norm();
        if !n2.is_finite() {
            return Err(Error::NonFinite {
                t: 0.0,
                context: "coherent amplitudes (|α|² too large for f64; use the semiclassical engine)",
            });
        }
        let tail = state.tail_mass();
        if tail > tail_tolerance {
            let occ = alpha.norm_sqr();
            let suggested = (1.3 * (occ + 10.0 * (occ + 1.0).sqrt() + 20.0)).ceil() as usize;
            return Err(Error::CoherentTail {
                tail,
                tolerance: tail_tolerance,
                dim,
                suggested: suggested.max(dim + 1),
            });
        }
        let mut state = state;
        let n = state.norm();
        state.scale(1.0 / n);
        Ok(state)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn amplitudes(&self) -> &Array1<Complex64> {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_slice(&self) -> &[Complex64] {
        self.amplitudes.as_slice().expect("contiguous amplitudes")
    }

    pub(crate) fn set_from(&mut self, data: &[Complex64], t: f64) {
        self.amplitudes
            .as_slice_mut()
            .expect("contiguous amplitudes")
            .copy_from_slice(data);
        self.t = t;
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    fn scale(&mut self, factor: f64) {
        self.amplitudes.mapv_inplace(|z| z * factor);
    }

    pub(crate) fn renormalize(&mut self) -> Result<()> {
        let n = self.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::NonFinite {
                t: self.t,
                context: "quantum state norm",
            });
        }
        self.scale(1.0 / n);
        Ok(())
    }

    /// Probability mass in the top 10% of levels (at least one level).
    pub fn tail_mass(&self) -> f64 {
        let dim = self.dim();
        let tail_levels = (dim / 10).max(1);
        let nrm2: f64 = self.amplitudes.iter().map(|z| z.norm_sqr()).sum();
        self.amplitudes
            .iter()
            .skip(dim - tail_levels)
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            / nrm2
    }

    /// ⟨ψ|A|ψ⟩/⟨ψ|ψ⟩ for a Hermitian matrix; the imaginary residue must be
    /// at machine level or the call panics.
    pub fn expectation(&self, op: &Array2<Complex64>) -> Result<f64> {
        if op.nrows() != self.dim() || op.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                state_dim: self.dim(),
                op_dim: op.nrows(),
            });
        }
        let applied = op.dot(&self.amplitudes);
        let mut acc = Complex64::new(0.0, 0.0);
        let mut nrm2 = 0.0;
        for (a, b) in self.amplitudes.iter().zip(applied.iter()) {
            acc += a.conj() * b;
            nrm2 += a.norm_sqr();
        }
        let value = acc / nrm2;
        assert!(
            value.im.abs() < 1e-10 * (1.0 + value.re.abs()),
            "expectation of a non-Hermitian operator: imaginary part {}",
            value.im
        );
        Ok(value.re)
    }

    /// ⟨a⟩ via the ladder algebra (O(N)).
    pub fn expect_lowering(&self) -> Complex64 {
        let c = &self.amplitudes;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut nrm2 = 0.0;
        for n in 0..c.len() {
            nrm2 += c[n].norm_sqr();
            if n + 1 < c.len() {
                acc += c[n].conj() * ((n + 1) as f64).sqrt() * c[n + 1];
            }
        }
        acc / nrm2
    }

    /// (⟨Q⟩, ⟨P⟩).
    pub fn centroid(&self) -> (f64, f64) {
        let a = self.expect_lowering();
        (
            std::f64::consts::SQRT_2 * a.re,
            std::f64::consts::SQRT_2 * a.im,
        )
    }

    /// (⟨Q⟩, ⟨P⟩, σ_QQ, σ_PP) from ⟨a⟩, ⟨a²⟩, ⟨a†a⟩.
    pub fn centroid_and_variances(&self) -> (f64, f64, f64, f64) {
        let c = &self.amplitudes;
        let mut ea = Complex64::new(0.0, 0.0);
        let mut ea2 = Complex64::new(0.0, 0.0);
        let mut en = 0.0;
        let mut nrm2 = 0.0;
        for n in 0..c.len() {
            nrm2 += c[n].norm_sqr();
            en += n as f64 * c[n].norm_sqr();
            if n + 1 < c.len() {
                ea += c[n].conj() * ((n + 1) as f64).sqrt() * c[n + 1];
            }
            if n + 2 < c.len() {
                ea2 += c[n].conj()
                    * (((n + 1) as f64) * ((n + 2) as f64)).sqrt()
                    * c[n + 2];
            }
        }
        ea /= nrm2;
        ea2 /= nrm2;
        en /= nrm2;
        let q = std::f64::consts::SQRT_2 * ea.re;
        let p = std::f64::consts::SQRT_2 * ea.im;
        // ⟨Q²⟩ = Re⟨a²⟩ + ⟨n⟩ + ½ ; ⟨P²⟩ = −Re⟨a²⟩ + ⟨n⟩ + ½.
        let q2 = ea2.re + en + 0.5;
        let p2 = -ea2.re + en + 0.5;
        (q, p, q2 - q * q, p2 - p * p)
    }

    /// Effective number of occupied basis states, 1/Σ|c_n|⁴.
    pub fn participation_ratio(&self) -> f64 {
        let nrm2: f64 = self.amplitudes.iter().map(|z| z.norm_sqr()).sum();
        let inv: f64 = self
            .amplitudes
            .iter()
            .map(|z| (z.norm_sqr() / nrm2).powi(2))
            .sum();
        1.0 / inv
    }

    /// Apply the phase-space displacement unitary D(ε) = exp(εa† − ε̄a)
    /// with ε = (dx + i dp)/√2, which moves the centroid by exactly
    /// (dx, dp). Evaluated by its exponential series, which converges in a
    /// handful of terms for the small kicks and resets this is used for;
    /// the result is renormalized to absorb truncation residue at the basis
    /// edge.
    pub fn displace(&self, dx: f64, dp: f64) -> Result<Self> {
        let eps = Complex64::new(dx, dp) * std::f64::consts::FRAC_1_SQRT_2;
        let dim = self.dim();
        let mut result = self.amplitudes.to_vec();
        let mut term = self.amplitudes.to_vec();
        let mut scratch = vec![Complex64::ZERO; dim];
        let base: f64 = result.iter().map(|z| z.norm_sqr()).sum();
        for m in 1..=48 {
            // scratch = (ε a† − ε̄ a) term / m
            let inv_m = 1.0 / m as f64;
            for i in 0..dim {
                let mut v = Complex64::ZERO;
                if i >= 1 {
                    v += eps * (i as f64).sqrt() * term[i - 1];
                }
                if i + 1 < dim {
                    v -= eps.conj() * ((i + 1) as f64).sqrt() * term[i + 1];
                }
                scratch[i] = v * inv_m;
            }
            std::mem::swap(&mut term, &mut scratch);
            let mut term_sq = 0.0;
            for i in 0..dim {
                result[i] += term[i];
                term_sq += term[i].norm_sqr();
            }
            if term_sq <= 1e-32 * base {
                let mut out = Self {
                    amplitudes: Array1::from(result),
                    t: self.t,
                };
                out.renormalize()?;
                return Ok(out);
            }
        }
        Err(Error::InvalidParameter {
            name: "displacement",
            value: eps.norm(),
            reason: "displacement series did not converge; magnitude too large for this basis",
        })
    }

    /// Zero-pad into a larger basis; expectation values are unchanged.
    pub fn grown(&self, new_dim: usize) -> Self {
        assert!(new_dim >= self.dim());
        let mut amplitudes = Array1::zeros(new_dim);
        amplitudes
            .slice_mut(ndarray::s![..self.dim()])
            .assign(&self.amplitudes);
        Self {
            amplitudes,
            t: self.t,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SystemParams;
    use crate::quantum::operators::OperatorSet;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn coherent_at_origin_is_ground_state() {
        let s = QuantumState::coherent(16, 0.0, 0.0, 1e-6).unwrap();
        assert_relative_eq!(s.amplitudes()[0].re, 1.0, max_relative = 1e-15);
        assert!(s.amplitudes().iter().skip(1).all(|z| z.norm() == 0.0));
    }

    #[test]
    fn coherent_centroid_matches_construction() {
        let s = QuantumState::coherent(64, 2.0, 1.0, 1e-8).unwrap();
        let (q, p) = s.centroid();
        assert_abs_diff_eq!(q, 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(p, 1.0, epsilon = 1e-10);

        let params = SystemParams::new(1.0, 0.3, 0.3, 1.0).unwrap();
        let ops = OperatorSet::build(64, &params).unwrap();
        assert_abs_diff_eq!(s.expectation(ops.q()).unwrap(), 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(s.expectation(ops.p()).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn coherent_variances_are_half() {
        for (x, p) in [(0.0, 0.0), (2.0, 1.0), (-3.0, 0.5)] {
            let s = QuantumState::coherent(72, x, p, 1e-8).unwrap();
            let (_, _, sqq, spp) = s.centroid_and_variances();
            assert_abs_diff_eq!(sqq, 0.5, epsilon = 1e-9);
            assert_abs_diff_eq!(spp, 0.5, epsilon = 1e-9);
        }
    }

    #[test]
    fn coherent_tail_error_suggests_dimension() {
        let err = QuantumState::coherent(8, 6.0, 0.0, 1e-6).unwrap_err();
        match err {
            Error::CoherentTail { suggested, dim, .. } => {
                assert_eq!(dim, 8);
                assert!(suggested > 18, "suggested {suggested} too small for |α|² = 18");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn expectation_examples() {
        let params = SystemParams::new(1.0, 0.3, 0.3, 1.0).unwrap();
        let ops = OperatorSet::build(64, &params).unwrap();
        let ground = QuantumState::ground(64);
        assert_abs_diff_eq!(ground.expectation(ops.q()).unwrap(), 0.0);

        let s = QuantumState::coherent(64, 3.0, -1.0, 1e-8).unwrap();
        assert_abs_diff_eq!(s.expectation(ops.q()).unwrap(), 3.0, epsilon = 1e-9);

        // |1⟩: ⟨a†a⟩ = 1 exactly.
        let mut amps = vec![Complex64::ZERO; 16];
        amps[1] = Complex64::new(1.0, 0.0);
        let one = QuantumState::from_amplitudes(amps).unwrap();
        let number = {
            let raising = ops.lowering().t().mapv(|z| z.conj());
            raising.dot(ops.lowering())
        };
        let n16 = number.slice(ndarray::s![..16, ..16]).to_owned();
        assert_eq!(one.expectation(&n16).unwrap(), 1.0);
    }

    #[test]
    fn expectation_dimension_mismatch() {
        let params = SystemParams::new(1.0, 0.3, 0.3, 1.0).unwrap();
        let ops = OperatorSet::build(32, &params).unwrap();
        let s = QuantumState::ground(16);
        assert!(matches!(
            s.expectation(ops.q()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn displacement_moves_centroid_exactly() {
        let s = QuantumState::coherent(96, 1.0, -0.5, 1e-8).unwrap();
        let d = s.displace(1e-4 * 0.6, -1e-4 * 0.8).unwrap();
        assert_relative_eq!(d.norm(), 1.0, max_relative = 1e-12);
        let (q0, p0) = s.centroid();
        let (q1, p1) = d.centroid();
        let moved = ((q1 - q0).powi(2) + (p1 - p0).powi(2)).sqrt();
        assert_relative_eq!(moved, 1e-4, max_relative = 1e-6);
        // Zero displacement is the identity.
        let z = s.displace(0.0, 0.0).unwrap();
        assert_eq!(z.amplitudes(), s.amplitudes());
    }

    #[test]
    fn displacement_works_on_generic_states() {
        // Superposition state, not coherent: centroid still moves by exactly
        // the requested amount (D†(ε) a D(ε) = a + ε holds for any state).
        let mut amps = vec![Complex64::ZERO; 48];
        amps[0] = Complex64::new(0.6, 0.1);
        amps[3] = Complex64::new(-0.4, 0.3);
        amps[7] = Complex64::new(0.2, -0.5);
        let s = QuantumState::from_amplitudes(amps).unwrap();
        let (q0, p0) = s.centroid();
        let d = s.displace(2e-3, -1e-3).unwrap();
        let (q1, p1) = d.centroid();
        assert_abs_diff_eq!(q1 - q0, 2e-3, epsilon = 1e-9);
        assert_abs_diff_eq!(p1 - p0, -1e-3, epsilon = 1e-9);
    }

    #[test]
    fn growth_preserves_expectations_and_shrinks_tail() {
        let s = QuantumState::coherent(40, 2.0, 0.5, 1e-4).unwrap();
        let g = s.grown(60);
        let (q0, p0) = s.centroid();
        let (q1, p1) = g.centroid();
        assert_abs_diff_eq!(q0, q1, epsilon = 1e-12);
        assert_abs_diff_eq!(p0, p1, epsilon = 1e-12);
        assert!(g.tail_mass() < s.tail_mass());
    }

    #[test]
    fn participation_ratio_counts_states() {
        let ground = QuantumState::ground(16);
        assert_relative_eq!(ground.participation_ratio(), 1.0, max_relative = 1e-12);
        let mut amps = vec![Complex64::ZERO; 16];
        amps[0] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amps[5] = Complex64::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
        let even = QuantumState::from_amplitudes(amps).unwrap();
        assert_relative_eq!(even.participation_ratio(), 2.0, max_relative = 1e-12);
    }
}
