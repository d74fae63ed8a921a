//! Seeded random streams with hierarchical derivation.
//!
//! A master seed derives per-trial seeds, which derive per-component seeds
//! (environment, student, teacher, evaluation). Derivation depends only on
//! the parent seed and the child label, never on how many numbers the parent
//! has drawn, so trials can be scheduled in any order.

use rand::{Error as RandError, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct RandomStream {
    seed: u64,
    rng: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn label_hash(label: &str) -> u64 {
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Child seed for an indexed child (e.g. trial number).
    pub fn child_seed(&self, index: u64) -> u64 {
        splitmix64(self.seed ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
    }

    /// Independent stream for an indexed child.
    pub fn child(&self, index: u64) -> Self {
        Self::new(self.child_seed(index))
    }

    /// Independent stream for a named component.
    pub fn component(&self, label: &str) -> Self {
        Self::new(splitmix64(self.seed ^ splitmix64(label_hash(label))))
    }

    /// Uniform sample in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        // 53 random mantissa bits
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        rand::Rng::gen_range(&mut self.rng, 0..n)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), RandError> {
        self.rng.try_fill_bytes(dest)
    }
}
