//! Reproducible complex Wiener increments.
//!
//! Each increment dξ = a + ib has independent Gaussian components with mean 0
//! and variance dt/2, which realizes the moment structure
//! M(dξ) = 0, M(dξ dξ) = 0, M(dξ dξ*) = dt, with M the mean over
//! realizations (i.e. over seeds).
//!
//! The generator is counter-based: the increment at position `counter` is a
//! pure function of `(seed, counter)`, so a stream can be forked and the fork
//! replays exactly the same sequence. This is what lets a fiducial and a
//! perturbed trajectory consume identical noise realizations, and lets
//! parameter sweeps seed every grid cell independently.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::{Error, Result};

/// ChaCha word-position stride per increment: two u64 draws = four u32 words.
const WORDS_PER_INCREMENT: u128 = 4;

/// Seeded, forkable source of complex Wiener increments.
///
/// Two streams with the same seed produce identical sequences; a fork
/// replays the parent's sequence from the current counter onward.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    seed: u64,
    counter: u64,
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            counter: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// The seed this stream was created with (recorded in output headers).
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of increments drawn so far.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Draw the next increment dξ for a step of length `dt`.
    ///
    /// The components are Box-Muller Gaussians scaled by √(dt/2); `dt = 0`
    /// yields exactly zero. The counter always advances by one.
    pub fn next_increment(&mut self, dt: f64) -> Result<Complex64> {
        if !(dt >= 0.0) || !dt.is_finite() {
            return Err(Error::BadTimeStep(dt));
        }
        let w1 = self.rng.next_u64();
        let w2 = self.rng.next_u64();
        self.counter += 1;
        // u1 in (0, 1] keeps the log finite; u2 in [0, 1).
        let u1 = ((w1 >> 11) + 1) as f64 * (1.0 / 9007199254740992.0);
        let u2 = (w2 >> 11) as f64 * (1.0 / 9007199254740992.0);
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        let scale = (dt * 0.5).sqrt();
        Ok(Complex64::new(scale * r * c, scale * r * s))
    }

    /// Independent handle that replays exactly this stream's remaining
    /// sequence, starting from the current counter.
    pub fn fork(&self) -> Self {
        self.clone()
    }

    /// Position a fresh stream at an arbitrary counter. The increment drawn
    /// there is identical to the one a sequential stream would produce.
    pub fn at_counter(seed: u64, counter: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_word_pos(counter as u128 * WORDS_PER_INCREMENT);
        Self { seed, counter, rng }
    }

    /// Skip `n` increments without generating them.
    pub fn skip(&mut self, n: u64) {
        self.counter += n;
        self.rng
            .set_word_pos(self.counter as u128 * WORDS_PER_INCREMENT);
    }
}

/// SplitMix64 finalizer: the avalanche stage used for seed derivation.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable derivation of sub-seeds from a base seed and a salt path, used to
/// give every sweep cell, realization, and kick generator its own stream.
/// Pure integer mixing, so the mapping never changes across builds.
pub fn derive_seed(base: u64, salt: &[u64]) -> u64 {
    let mut h = mix64(base);
    for &s in salt {
        h = mix64(h ^ s);
    }
    h
}
