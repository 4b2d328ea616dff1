//! Deterministic per-replicate random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// RNG for replicate `index` under `master_seed`.
///
/// Streams depend only on the pair, so replicate results do not depend on how
/// replicates are scheduled across workers.
pub fn replicate_rng(master_seed: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}
