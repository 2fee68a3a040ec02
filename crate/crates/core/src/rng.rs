//! Seeded random streams.
//!
//! Every chain, replica and probe loop draws from its own ChaCha8 stream. A
//! stream is identified by `(seed, stream_id)`: the 64-bit seed is expanded to
//! the ChaCha key and `stream_id` selects the ChaCha stream (nonce), so streams
//! with different ids never overlap and results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type ChainRng = ChaCha8Rng;

pub fn stream(seed: u64, stream_id: u64) -> ChainRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Two-level stream id, e.g. `(replica, eta index)`.
pub fn substream(seed: u64, major: u64, minor: u64) -> ChainRng {
    stream(seed, (major << 20) ^ minor)
}

pub fn standard_normal_vec<R: rand::Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn fill_standard_normal<R: rand::Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    for o in out.iter_mut() {
        *o = StandardNormal.sample(rng);
    }
}
