//! Seeded random streams.
//!
//! Every random consumer in a run draws from its own ChaCha stream derived
//! from the run seed, so changing how one consumer uses randomness does not
//! shift the draws seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids used by the training engine.
pub mod stream {
    pub const INIT: u64 = 10;
    pub const SELECTION: u64 = 11;
    /// Dropout masks and sampled neighborhoods, drawn in step order.
    pub const STEP: u64 = 12;
}

pub fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
