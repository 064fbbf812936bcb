//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream addressed by
//! `(seed, lane, index)`: the seed and lane select the key, the index selects
//! the ChaCha stream. Workers never share a generator, so results do not
//! depend on how work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream families. Distinct lanes never overlap for the same seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Lane {
    MasterPath = 1,
    Refinement = 2,
    InnerMonteCarlo = 3,
    Conditional = 4,
    Scratch = 5,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream for `(seed, lane, tags..., index)`.
pub fn stream(seed: u64, lane: Lane, tags: &[u64], index: u64) -> StreamRng {
    let mut state = seed;
    let mut mix = splitmix64(&mut state) ^ (lane as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93);
    for &t in tags {
        let mut s = mix ^ t.wrapping_mul(0xA076_1D64_78BD_642F);
        mix = splitmix64(&mut s);
    }
    let mut key = [0u8; 32];
    let mut s = mix;
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut s).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
