//! Counter-based randomness.
//!
//! Every random decision in the simulator is keyed on the values that
//! identify it (seed, epoch, iteration, vertex, ...), never on call order, so
//! results do not depend on which server or thread performs the work.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a seed with one counter value.
#[inline]
pub fn mix64(seed: u64, v: u64) -> u64 {
    splitmix(splitmix(seed) ^ v.wrapping_mul(GOLDEN).rotate_left(17))
}

/// Mixes a seed with an arbitrary number of counter values.
pub fn mix_all(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix(seed), |acc, &p| mix64(acc, p))
}

/// Maps 64 random bits to a uniform value in `[0, 1)`.
#[inline]
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// A ChaCha stream seeded from a mixed key.
pub fn stream(key: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(key)
}

/// Identifies one sampling or shuffling decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub epoch: u64,
    pub iteration: u64,
    pub item: u64,
}

impl StreamKey {
    pub fn new(seed: u64, epoch: u64, iteration: u64, item: u64) -> Self {
        Self {
            seed,
            epoch,
            iteration,
            item,
        }
    }

    pub fn mixed(&self) -> u64 {
        mix_all(self.seed, &[self.epoch, self.iteration, self.item])
    }

    /// Derives a sub-key, e.g. per model inside one decision.
    pub fn child(&self, tag: u64) -> u64 {
        mix64(self.mixed(), tag)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        stream(self.mixed())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_is_half_open() {
        assert_eq!(unit_f64(0), 0.0);
        assert!(unit_f64(u64::MAX) < 1.0);
    }

    #[test]
    fn keys_separate_fields() {
        let a = StreamKey::new(1, 0, 1, 0).mixed();
        let b = StreamKey::new(1, 1, 0, 0).mixed();
        assert_ne!(a, b);
        assert_eq!(a, StreamKey::new(1, 0, 1, 0).mixed());
    }
}
