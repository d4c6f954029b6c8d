//! Seed discipline: every random consumer draws from its own ChaCha stream,
//! identified by `(seed, stream)`, so adding a consumer never perturbs the
//! draws of another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids used inside the crate.
pub mod streams {
    pub const TRAIN_DATA: u64 = 1;
    pub const HOLDOUT_DATA: u64 = 2;
    pub const PEGASOS: u64 = 3;
    pub const RADEMACHER: u64 = 4;
    pub const EMBED_ROLE_1: u64 = 5;
    pub const EMBED_ROLE_2: u64 = 6;
    pub const NOISE: u64 = 7;
    pub const VERIFY: u64 = 8;
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
