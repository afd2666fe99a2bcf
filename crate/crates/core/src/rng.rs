//! Seed derivation for independent per-replication random streams.
//!
//! Every replication draws from several streams (arm sets, noise, the true
//! parameter, randomised policies). Each stream is a ChaCha8 generator keyed
//! by a SplitMix64 hash of `(base_seed, replication, stream)`, so streams
//! never share state and adding a stream does not perturb the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named random streams of a replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Arms = 1,
    Noise = 2,
    Theta = 3,
    Policy = 4,
    Spa = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `(base_seed, replication, stream)` into a single 64-bit seed.
pub fn derive_seed(base_seed: u64, replication: u64, stream: Stream) -> u64 {
    let a = splitmix64(base_seed);
    let b = splitmix64(a ^ replication.wrapping_mul(0xD1B5_4A32_D192_ED03));
    splitmix64(b ^ (stream as u64).wrapping_mul(0xA24B_AED4_963E_E407))
}

pub fn stream_rng(base_seed: u64, replication: u64, stream: Stream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base_seed, replication, stream))
}
