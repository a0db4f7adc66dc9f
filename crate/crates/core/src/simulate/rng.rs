//! Seeded random streams.
//!
//! Every replication draws from its own ChaCha8 stream: the 64-bit seed keys
//! the generator and the replication index selects the stream, so results
//! do not depend on how replications are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn replication_rng(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}
