//! Seeded, counter-addressed random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream selected by
//! `(seed, stream)` and positioned by a word offset, so a value depends only
//! on its coordinates and never on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Open ChaCha8 stream `stream` of `seed`, positioned at 64-bit draw `index`.
pub(crate) fn stream_at(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(u128::from(index) * 2);
    rng
}

/// Stream identifier for a two-level coordinate, e.g. `(component, record)`.
pub(crate) fn stream_id(tag: u32, a: u32, b: u32) -> u64 {
    (u64::from(tag) << 56) ^ (u64::from(a) << 32) ^ u64::from(b)
}
