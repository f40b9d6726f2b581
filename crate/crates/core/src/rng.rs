//! Seeded randomness and low-discrepancy sampling.
//!
//! Everything that draws numbers in this crate goes through
//! [`DeterministicRng`] so that identical seeds reproduce identical traces
//! bit for bit.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::fmath;

pub struct DeterministicRng {
    inner: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl DeterministicRng {
    pub fn new(seed: u64) -> Self {
        DeterministicRng {
            inner: ChaCha8Rng::seed_from_u64(seed),
            spare_normal: None,
        }
    }

    /// Uniform in [0, 1), 53-bit resolution.
    pub fn unit(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn uniform_box(&mut self, lo: &[f64], hi: &[f64]) -> Vec<f64> {
        lo.iter().zip(hi).map(|(l, h)| self.uniform(*l, *h)).collect()
    }

    /// Standard normal by Box-Muller.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        // unit() never returns 0 exactly after the shift? It can; guard the log.
        let mut u1 = self.unit();
        if u1 < 1e-300 {
            u1 = 1e-300;
        }
        let u2 = self.unit();
        let r = fmath::sqrt(-2.0 * fmath::ln(u1));
        let phi = 2.0 * core::f64::consts::PI * u2;
        self.spare_normal = Some(r * fmath::cos(phi));
        r * libm::sin(phi)
    }
}

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Radical-inverse (Halton) coordinate for a 1-based index.
pub fn halton(index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let mut i = index;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Low-discrepancy point mapped into a box; supports up to 8 dimensions.
pub fn halton_point(index: u64, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    assert!(lo.len() <= PRIMES.len());
    lo.iter()
        .zip(hi)
        .enumerate()
        .map(|(d, (l, h))| l + (h - l) * halton(index, PRIMES[d]))
        .collect()
}

/// FNV-1a over the bit patterns of a float slice; used to derive
/// reproducible per-call seeds from problem data.
pub fn hash_f64s(seed: u64, values: &[f64]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed;
    for v in values {
        for byte in v.to_bits().to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}
