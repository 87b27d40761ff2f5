//! Seeded random streams.
//!
//! ChaCha8 is used so draws are identical across platforms for a given seed.

use crate::numerics::DenseVector;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    counter: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            counter: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent stream for member `index` of a batch started from `seed`.
    pub fn derived(seed: u64, index: u64) -> Self {
        Self::new(splitmix64(seed ^ splitmix64(index.wrapping_add(0x5851_f42d_4c95_7f2d))))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of 64-bit words consumed so far.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter += 1;
        self.rng.next_u64()
    }

    /// Vector of independent ±1 entries, one bit per entry.
    pub fn rademacher(&mut self, dim: usize) -> DenseVector {
        let mut out = Vec::with_capacity(dim);
        let mut bits = 0u64;
        for i in 0..dim {
            if i % 64 == 0 {
                bits = self.next_u64();
            }
            out.push(if bits & 1 == 1 { 1.0 } else { -1.0 });
            bits >>= 1;
        }
        DenseVector::from_vec_unchecked(out)
    }

    pub fn uniform(&mut self, low: f64, high: f64) -> f64 {
        self.counter += 1;
        self.rng.random_range(low..high)
    }

    pub fn gaussian(&mut self) -> f64 {
        self.counter += 1;
        self.rng.sample(StandardNormal)
    }

    pub fn gaussian_vector(&mut self, dim: usize) -> DenseVector {
        DenseVector::from_vec_unchecked((0..dim).map(|_| self.gaussian()).collect())
    }

    pub fn inner_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
