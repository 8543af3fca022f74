//! Counter-based random substreams.
//!
//! Every batch of channel draws is split into fixed-size chunks and each chunk
//! owns a generator keyed by `(seed, purpose, iteration, chunk)`. Results are
//! therefore identical whether chunks run on one thread or many.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Frames per chunk of a drift batch or simulation run.
pub const CHUNK_FRAMES: usize = 1024;

/// What a substream is used for; keeps search and simulation draws disjoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    SearchOdba = 1,
    SearchNodba = 2,
    SearchBenchmark = 3,
    Simulation = 4,
    Oracle = 5,
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn substream(seed: u64, purpose: Purpose, iteration: u64, chunk: u64) -> ChaCha8Rng {
    let mut k = mix64(seed);
    k = mix64(k ^ purpose as u64);
    k = mix64(k ^ iteration);
    k = mix64(k ^ chunk);
    ChaCha8Rng::seed_from_u64(k)
}

/// Chunk boundaries `(chunk_index, frames_in_chunk)` covering `frames`.
pub fn chunks(frames: usize) -> impl Iterator<Item = (u64, usize)> {
    let n = frames.div_ceil(CHUNK_FRAMES);
    (0..n).map(move |c| (c as u64, CHUNK_FRAMES.min(frames - c * CHUNK_FRAMES)))
}
