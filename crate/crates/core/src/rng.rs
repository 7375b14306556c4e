//! Seeded random streams.
//!
//! Every stochastic routine in the crate draws from [`ChaCha8Rng`], whose output is
//! fixed by its seed on every platform. Independent sub-streams for parallel work
//! are derived by hashing `(master_seed, cell, replicate)` through [`mix_seed`], so
//! results never depend on scheduling order.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as StreamRng;

/// SplitMix64 finalizer.
#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a sub-stream seed from a master seed and two indices.
pub fn mix_seed(master: u64, cell: u64, replicate: u64) -> u64 {
    let a = splitmix64(master);
    let b = splitmix64(a ^ cell.wrapping_mul(0xD6E8_FEB8_6659_FD93));
    splitmix64(b ^ replicate.wrapping_mul(0xA076_1D64_78BD_642F))
}

pub fn stream(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}

pub fn sub_stream(master: u64, cell: u64, replicate: u64) -> StreamRng {
    stream(mix_seed(master, cell, replicate))
}
