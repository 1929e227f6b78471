//! Deterministic random streams.
//!
//! Every chain draws from a ChaCha8 stream keyed by `(seed, stream id)`.
//! ChaCha is counter based, so distinct stream ids give independent sequences
//! from one master seed and a chain is reproducible from its key alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn stream(seed: u64, stream_id: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream id for a grid cell, derived from its indices.
pub fn cell_stream_id(indices: &[u64]) -> u64 {
    indices.iter().fold(0x005E_ED0F_CE11_u64, |h, &i| splitmix64(h ^ splitmix64(i)))
}
