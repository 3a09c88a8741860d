//! Reproducible random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by
//! `(seed, domain)` and positioned on stream `index`. ChaCha is counter based,
//! so stream `(seed, domain, index)` is the same sequence no matter which
//! thread consumes it or in which order streams are created.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Separates the uses of one user seed so that, say, snapshot 3 and
/// permutation replica 3 never share a stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Snapshot = 0x5a17_0001,
    Permutation = 0x5a17_0002,
    Parameters = 0x5a17_0003,
    Segment = 0x5a17_0004,
    Experiment = 0x5a17_0005,
}

pub type StreamRng = ChaCha8Rng;

pub fn substream(seed: u64, domain: Domain, index: u64) -> StreamRng {
    let key = splitmix64(seed ^ splitmix64(domain as u64));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}

/// Derives a child seed, e.g. one per simulation run.
pub fn derive_seed(seed: u64, domain: Domain, index: u64) -> u64 {
    use rand::RngCore;
    substream(seed, domain, index).next_u64()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
