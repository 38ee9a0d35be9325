//! Keyed random substreams.
//!
//! Every random draw in a run comes from a ChaCha stream whose seed is a hash
//! of the run seed and a tuple of keys (purpose, slot, index, ...). Draws are
//! therefore independent of evaluation order and worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Purpose tags used as the first key of a substream.
pub mod purpose {
    pub const TOPOLOGY: u64 = 1;
    pub const LARGE_SCALE: u64 = 2;
    pub const CALIBRATION: u64 = 3;
    pub const CHANNEL: u64 = 4;
    pub const PILOT_NOISE: u64 = 5;
    pub const SELECTION: u64 = 6;
    pub const PILOT_ORDER: u64 = 7;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed mixed with an arbitrary key path.
pub fn derive_seed(seed: u64, keys: &[u64]) -> u64 {
    keys.iter()
        .fold(splitmix64(seed), |acc, &k| splitmix64(acc ^ splitmix64(k)))
}

pub fn substream(seed: u64, keys: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(seed, keys))
}
