//! Seedable, portable random streams.
//!
//! Every stochastic operation in this crate draws from a ChaCha8 generator
//! whose seed is derived from a user seed and a stream index through the
//! SplitMix64 finalizer. The derivation is pure integer arithmetic, so the
//! same (seed, stream) pair produces the same draws on every platform and
//! regardless of how work is chunked across threads.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Name recorded in run metadata so downstream consumers can reproduce draws.
pub const ALGORITHM: &str = "chacha8 seeded via splitmix64(seed, stream)";

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for stream `stream` under the master `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let z = splitmix64(seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1));
    ChaCha8Rng::seed_from_u64(z)
}
