//! Per-chain random streams.
//!
//! One root seed fans out into independent streams by the ChaCha stream
//! counter, so chain `k` sees the same numbers no matter how many other
//! chains run or in which order they are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{OpenClosed01, StandardNormal};

#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha8Rng,
}

impl StreamRng {
    pub fn new(root_seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(root_seed);
        inner.set_stream(stream);
        Self { inner }
    }

    /// Fills `out` with independent standard normals.
    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.inner.sample(StandardNormal);
        }
    }

    /// A uniform draw from `(0, 1]`, so its logarithm is always finite.
    pub fn uniform(&mut self) -> f64 {
        self.inner.sample(OpenClosed01)
    }

    /// Draws one step's worth of randomness: `noise.len()` normals, then one
    /// uniform. Every kernel consumes exactly this per step.
    pub fn step_draw(&mut self, noise: &mut [f64]) -> f64 {
        self.fill_normal(noise);
        self.uniform()
    }
}

/// Mixes a tag into a root seed so that separate experiments sharing a root
/// seed use unrelated stream families.
pub fn derive_seed(root: u64, tag: &str) -> u64 {
    // FNV-1a over the tag, then a splitmix64 finalizer
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut z = root ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
