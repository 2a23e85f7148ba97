//! Seeded, splittable random streams.
//!
//! Each chain owns a ChaCha8 stream selected by `(seed, stream)`. ChaCha is
//! counter based, so sub-streams are independent without any shared state
//! and the position of a stream is just its block counter.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct ChainRng {
    inner: ChaCha8Rng,
    seed: u64,
    stream: u64,
}

impl ChainRng {
    /// Stream 0 of `seed`.
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner, seed, stream }
    }

    /// A fresh generator on another stream of the same seed.
    pub fn split(&self, stream: u64) -> Self {
        Self::with_stream(self.seed, stream)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    #[inline]
    pub fn next_draw(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Fills `out` with the next `out.len()` draws, in the same order as
    /// repeated [`next_draw`](Self::next_draw) calls.
    #[inline]
    pub fn fill_draws(&mut self, out: &mut [u64]) {
        for d in out {
            *d = self.inner.next_u64();
        }
    }

    /// Number of 64-bit draws consumed so far.
    pub fn position(&self) -> u64 {
        (self.inner.get_word_pos() / 2) as u64
    }
}

/// Integer threshold for a Bernoulli(`p`) decision on the top 53 bits of a
/// draw. `p = 0` never fires and `p = 1` always does.
#[inline]
pub fn bernoulli_threshold(p: f64) -> u64 {
    const SCALE: f64 = (1u64 << 53) as f64;
    (p.clamp(0.0, 1.0) * SCALE) as u64
}

#[inline]
pub fn accepts(draw: u64, threshold: u64) -> bool {
    (draw >> 11) < threshold
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = ChainRng::with_stream(7, 3);
        let mut b = ChainRng::new(7).split(3);
        let mut c = ChainRng::with_stream(7, 4);
        let xs: Vec<u64> = (0..16).map(|_| a.next_draw()).collect();
        let ys: Vec<u64> = (0..16).map(|_| b.next_draw()).collect();
        let zs: Vec<u64> = (0..16).map(|_| c.next_draw()).collect();
        assert_eq!(xs, ys);
        assert_ne!(xs, zs);
        assert_eq!(a.position(), 16);
    }

    #[test]
    fn threshold_edges() {
        assert!(!accepts(0, bernoulli_threshold(0.0)));
        assert!(accepts(u64::MAX, bernoulli_threshold(1.0)));
        assert!(accepts(0, bernoulli_threshold(0.5)));
        assert!(!accepts(u64::MAX, bernoulli_threshold(0.5)));
    }
}
