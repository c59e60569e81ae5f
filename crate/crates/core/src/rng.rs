//! Seed derivation and the small set of random draws the crate needs.
//!
//! Every random stream is a ChaCha8 generator keyed by a 64-bit value
//! derived from the global seed and a purpose label, so that streams are
//! independent of each other and of the order in which they are created.

use core::f64::consts::TAU;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::math;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Platform-independent 64-bit hash of `(seed, bytes)`: FNV-1a over the
/// little-endian seed followed by the bytes, then a splitmix64 finalizer.
pub fn hash64(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for b in seed.to_le_bytes().iter().chain(bytes) {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(h)
}

/// Maps a hash onto `[0, 1)` using its top 53 bits.
pub fn unit_interval(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Derives a sub-seed for a named purpose.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    hash64(seed, label.as_bytes())
}

/// Deterministic random stream used throughout the crate.
pub struct Stream {
    inner: ChaCha8Rng,
}

impl Stream {
    pub fn new(seed: u64, label: &str) -> Self {
        Stream {
            inner: ChaCha8Rng::seed_from_u64(derive_seed(seed, label)),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        unit_interval(self.next_u64())
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `0..n` (Lemire's multiply-shift with rejection).
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        loop {
            let x = self.next_u64();
            let m = (x as u128) * (n as u128);
            let low = m as u64;
            if low >= n.wrapping_neg() % n {
                return (m >> 64) as usize;
            }
        }
    }

    /// Uniform integer in `lo..=hi`.
    pub fn between(&mut self, lo: usize, hi: usize) -> usize {
        lo + self.below(hi - lo + 1)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Standard normal via Box-Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        math::sqrt(-2.0 * math::ln(u1)) * libm::cos(TAU * u2)
    }

    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i + 1);
            xs.swap(i, j);
        }
    }

    /// `k` distinct elements of `pool`, in random order.
    pub fn sample<T: Clone>(&mut self, pool: &[T], k: usize) -> alloc::vec::Vec<T> {
        assert!(k <= pool.len());
        let mut idx: alloc::vec::Vec<usize> = (0..pool.len()).collect();
        for i in 0..k {
            let j = i + self.below(pool.len() - i);
            idx.swap(i, j);
        }
        idx[..k].iter().map(|&i| pool[i].clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable() {
        // Frozen value: any change here breaks random-slice reproducibility.
        assert_eq!(hash64(42, b"q1"), 0xa327_2d9c_8138_fb83);
        assert_ne!(hash64(1, b"q1"), hash64(2, b"q1"));
        assert_ne!(hash64(1, b"q1"), hash64(1, b"q2"));
    }

    #[test]
    fn below_is_in_range() {
        let mut s = Stream::new(7, "t");
        for n in 1..50 {
            for _ in 0..20 {
                assert!(s.below(n) < n);
            }
        }
    }

    #[test]
    fn streams_with_same_label_agree() {
        let mut a = Stream::new(3, "init");
        let mut b = Stream::new(3, "init");
        let mut c = Stream::new(3, "other");
        let xa: alloc::vec::Vec<u64> = (0..4).map(|_| a.next_u64()).collect();
        let xb: alloc::vec::Vec<u64> = (0..4).map(|_| b.next_u64()).collect();
        let xc: alloc::vec::Vec<u64> = (0..4).map(|_| c.next_u64()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }
}
