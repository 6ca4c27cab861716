//! Seeded RNG streams.
//!
//! Every random draw in the pipeline goes through a ChaCha8 stream derived
//! from a master seed and a list of stream coordinates (instance index,
//! stage number, ...), so generation order and worker count never change
//! the output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fold stream coordinates into a seed.
pub fn derive_seed(seed: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(splitmix64(seed), |acc, &c| {
            splitmix64(acc ^ splitmix64(c ^ 0xD1B5_4A32_D192_ED03))
        })
}

pub fn stream(seed: u64, coords: &[u64]) -> Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, coords))
}
