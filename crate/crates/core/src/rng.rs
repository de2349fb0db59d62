//! Reproducible random streams.
//!
//! Every Monte Carlo sample (and every optimizer restart) owns the stream
//! keyed by `(seed, index)`. Results therefore depend only on the seed and
//! the index, never on how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator type used throughout the crate.
pub type StreamRng = ChaCha8Rng;

/// Independent stream number `index` of the family selected by `seed`.
pub fn stream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
