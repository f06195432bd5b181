//! Seeded random lattice data.
//!
//! All randomness goes through ChaCha20, a counter-based stream cipher, so a
//! `(seed, stream)` pair replays identically on every platform.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::lattice::{Field, LatticeSpec, RealField};

/// Identifier recorded in run metadata.
pub const RNG_ALGORITHM: &str = "chacha20";

#[derive(Debug, Clone)]
pub struct FieldRng {
    inner: ChaCha20Rng,
}

impl FieldRng {
    pub fn new(seed: u64) -> Self {
        FieldRng {
            inner: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    /// Independent stream `stream` under the same seed.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        FieldRng { inner }
    }

    /// Uniform sample in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.inner.random::<f64>()
    }

    /// Real and imaginary parts i.i.d. uniform in `[-amplitude, amplitude)`.
    pub fn complex_field(&mut self, spec: LatticeSpec, amplitude: f64) -> Field {
        Field::from_fn(spec, |_| {
            let re = self.uniform(-amplitude, amplitude);
            let im = self.uniform(-amplitude, amplitude);
            Complex64::new(re, im)
        })
    }

    /// Entries i.i.d. uniform in `[-amplitude, amplitude)`.
    pub fn real_field(&mut self, spec: LatticeSpec, amplitude: f64) -> RealField {
        RealField::from_fn(spec, |_| self.uniform(-amplitude, amplitude))
    }

    pub fn uniform_field(&mut self, spec: LatticeSpec, lo: f64, hi: f64) -> RealField {
        RealField::from_fn(spec, |_| self.uniform(lo, hi))
    }

    /// A uniformly distributed unit complex number.
    pub fn unit_phase(&mut self) -> Complex64 {
        Complex64::from_polar(1.0, self.uniform(0.0, 2.0 * std::f64::consts::PI))
    }
}
