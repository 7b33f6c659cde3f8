//! Seeded random streams.
//!
//! Every randomized routine takes a `&mut impl Rng`; callers that start from
//! a bare seed go through [`seeded`]. Independent streams for parallel work
//! are derived with [`substream`]: the master seed keys a ChaCha8 generator
//! and the pair `(major, minor)` selects its 64-bit stream id as
//! `major << 32 | minor`. Streams with distinct ids never overlap, so results
//! are identical regardless of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StdStream = ChaCha8Rng;

pub fn seeded(seed: u64) -> StdStream {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn substream(seed: u64, major: u32, minor: u32) -> StdStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((major as u64) << 32) | minor as u64);
    rng
}
