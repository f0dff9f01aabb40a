//! Seeded random streams.
//!
//! Everything random in the crate goes through [`stream`], so a `(seed,
//! purpose)` pair always yields the same sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Independent stream for one purpose under a user seed.
pub fn stream(seed: u64, purpose: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose);
    rng
}

pub(crate) mod purpose {
    pub const CONFIGS: u64 = 1;
    pub const JITTER: u64 = 2;
    pub const COVARIATES: u64 = 3;
    pub const RESIDUALS: u64 = 4;
    pub const FOLDS: u64 = 5;
    pub const NAIVE: u64 = 6;
    pub const BOOTSTRAP: u64 = 8;
}
