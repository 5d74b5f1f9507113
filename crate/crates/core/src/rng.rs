//! Per-call random streams.
//!
//! Every randomized operation takes a 64-bit seed and a stream index. ChaCha
//! keeps the two independent: stream `k` of seed `s` never overlaps stream
//! `k'`, so running trials in parallel or in a different order cannot change
//! any single result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Generator for call `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
