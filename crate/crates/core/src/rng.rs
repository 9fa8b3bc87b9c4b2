//! Seeded random streams.
//!
//! Every stochastic routine takes an explicit `u64` seed. Batches that are
//! split into shards draw from independent ChaCha streams keyed by
//! `(seed, stream)`, so results do not depend on how many worker threads run
//! the shards.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Generator for stream `stream` under `seed`.
pub fn stream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Splits `total` into `shards` nearly equal parts, larger parts first.
pub fn shard_sizes(total: u64, shards: u64) -> impl Iterator<Item = u64> {
    let base = total / shards;
    let extra = total % shards;
    (0..shards).map(move |i| base + u64::from(i < extra))
}
