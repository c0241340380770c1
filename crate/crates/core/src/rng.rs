//! Portable seeded randomness.
//!
//! Every random draw in the crate goes through [`SeededRng`], which is
//! xoshiro256++ (Blackman & Vigna) whose 256-bit state is expanded from the
//! 64-bit seed with SplitMix64 (increment `0x9e3779b97f4a7c15`, mixing
//! multipliers `0xbf58476d1ce4e5b9` and `0x94d049bb133111eb`). The derived
//! draws below are spelled out so another implementation can reproduce a
//! seed bit-for-bit:
//!
//! - unit float: `(next_u64 >> 11) * 2^-53`, in `[0, 1)`
//! - uniform on `[lo, hi]`: `lo + (hi - lo) * unit`
//! - standard normal: Box-Muller, `sqrt(-2 ln(1 - u1)) * cos(2π u2)`, one draw per pair
//! - index below `n`: `(next_u64 as u128 * n) >> 64`
//! - shuffle: Fisher-Yates from the last slot down

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: Xoshiro256PlusPlus,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn standard_normal(&mut self) -> f64 {
        let u1 = self.unit();
        let u2 = self.unit();
        (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn index_below(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index_below(i + 1);
            items.swap(i, j);
        }
    }
}
