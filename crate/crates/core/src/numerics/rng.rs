use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::NumericsError;

/// `1 / (1 + exp(-x))`, evaluated without overflow for any finite `x`.
pub fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(expit(x))`.
pub fn log_expit(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Draws a Bernoulli(p) variable as 0/1.
pub fn bernoulli<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Result<u8, NumericsError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(NumericsError::InvalidProbability(p));
    }
    Ok((rng.random::<f64>() < p) as u8)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeded random stream with order-independent children.
///
/// `child(i)` depends only on the parent's key and `i`, never on how many
/// numbers the parent has produced, so replication `i` sees the same stream
/// whatever order (or thread) it runs on.
#[derive(Debug, Clone)]
pub struct RngStream {
    key: u64,
    rng: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::from_key(splitmix64(seed))
    }

    fn from_key(key: u64) -> Self {
        Self {
            key,
            rng: ChaCha20Rng::seed_from_u64(key),
        }
    }

    pub fn child(&self, index: u64) -> Self {
        Self::from_key(splitmix64(self.key ^ splitmix64(index.wrapping_add(1))))
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
