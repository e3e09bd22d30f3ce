//! Seeded random streams.
//!
//! Every randomized stage draws from a ChaCha stream whose key is built from
//! the stage seed plus whatever identifies the unit of work (a start vertex
//! and walk number, a user, ...). Work units can then run in any order on any
//! number of threads and still see the same numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stage tags mixed into a base seed so that stages never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Split,
    Sparsify,
    Walk,
    Init,
    Synthetic,
}

impl Stage {
    fn tag(self) -> u64 {
        match self {
            Stage::Split => 0x5350_4c49_5400_0001,
            Stage::Sparsify => 0x5350_4152_5300_0002,
            Stage::Walk => 0x5741_4c4b_0000_0003,
            Stage::Init => 0x494e_4954_0000_0004,
            Stage::Synthetic => 0x5359_4e54_0000_0005,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed a stage uses from the pipeline's base seed.
pub fn derive_seed(base: u64, stage: Stage) -> u64 {
    splitmix64(base ^ stage.tag())
}

/// A stream keyed by `(seed, a, b)`.
pub fn keyed_stream(seed: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&a.to_le_bytes());
    key[16..24].copy_from_slice(&b.to_le_bytes());
    key[24..32].copy_from_slice(b"psirec\0\0");
    ChaCha8Rng::from_seed(key)
}

/// A single stream keyed by one seed.
pub fn stream(seed: u64) -> ChaCha8Rng {
    keyed_stream(seed, 0, 0)
}
