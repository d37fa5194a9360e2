//! Random-number streams. Every chain owns a ChaCha8 generator seeded from
//! `(master_seed, stream)`, so runs are reproducible and chains independent.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator type used by all samplers.
pub type Rng = ChaCha8Rng;

/// Algorithm identifier recorded in run metadata.
pub const RNG_ALGORITHM: &str = "chacha8 (rand_chacha 0.3, seed_from_u64 + stream)";

/// Generator for stream `stream` of master seed `seed`.
pub fn make_rng(seed: u64, stream: u64) -> Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}
