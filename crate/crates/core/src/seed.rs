//! Seed splitting for reproducible parallel Monte Carlo.
//!
//! Every random stream is derived from the master seed and a path of integer
//! labels (experiment, sample size, replicate, node, ...), so results do not
//! depend on which worker runs which task.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed: `h = mix(master)`, then `h = mix(h ^ mix(label))` per label.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |h, &label| splitmix64(h ^ splitmix64(label)))
}

/// A ChaCha8 stream seeded by [`derive_seed`].
pub fn stream(master: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, path))
}

/// Stable 64-bit label for a string (FNV-1a), for naming streams.
pub fn label_hash(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}
