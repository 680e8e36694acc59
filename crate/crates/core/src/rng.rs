//! Counter-based Gaussian draws.
//!
//! Every normal is addressed by `(seed, stream, index)` and consumes a fixed
//! block of the ChaCha keystream, so a draw never depends on how many other
//! draws were made before it or on which thread made them.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 32-bit words of keystream consumed per normal.
const WORDS_PER_NORMAL: u128 = 4;

/// Sequential reader of standard normals starting at a given counter.
pub struct NormalStream {
    rng: ChaCha8Rng,
}

impl NormalStream {
    pub fn new(seed: u64, stream: u64, start_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        rng.set_word_pos(start_index as u128 * WORDS_PER_NORMAL);
        Self { rng }
    }

    /// Next standard normal (Box-Muller, cosine branch).
    #[inline]
    pub fn next_normal(&mut self) -> f64 {
        let a = self.rng.next_u64();
        let b = self.rng.next_u64();
        // (0, 1] so the logarithm stays finite
        let u1 = ((a >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64);
        let u2 = (b >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Standard normal number `index` of `stream` under `seed`.
pub fn normal_at(seed: u64, stream: u64, index: u64) -> f64 {
    NormalStream::new(seed, stream, index).next_normal()
}

/// Mix a base seed with a list of integer tags into a new seed (SplitMix64 finalizer).
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    let mut h = mix(base);
    for &t in tags {
        h = mix(h ^ mix(t));
    }
    h
}
