//! Keyed random substreams.
//!
//! Every stochastic draw in the simulation comes from a ChaCha stream keyed
//! by `(seed, tags...)`, so results do not depend on iteration order or on
//! how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags, kept distinct so different consumers never share a stream.
pub mod tag {
    pub const LAYOUT: u64 = 1;
    pub const FRONT_NOISE: u64 = 2;
    pub const SPAWN: u64 = 3;
    pub const OBSERVATION: u64 = 4;
    pub const TEAMS: u64 = 5;
    pub const KMEANS: u64 = 6;
    pub const SURVEY: u64 = 7;
    pub const GPS: u64 = 8;
    pub const TRIAL: u64 = 9;
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent generator for the given seed and tag path.
pub fn substream(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut h = splitmix64(seed);
    for &t in tags {
        h = splitmix64(h ^ splitmix64(t.wrapping_add(0x51_7C_C1_B7)));
    }
    ChaCha8Rng::seed_from_u64(h)
}

/// Seed for trial `trial` of an experiment sweep rooted at `seed`.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(seed ^ tag::TRIAL.rotate_left(32)) ^ trial)
}
