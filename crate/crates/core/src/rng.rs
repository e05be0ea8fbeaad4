//! Seed derivation for reproducible, order-independent replications.
//!
//! Every random draw in the crate comes from a ChaCha8 stream seeded with a
//! 64-bit value. Replication `r` of an experiment with base seed `s` derives
//! one seed per purpose from `(s, r, purpose)`, so the draws of a replication
//! never depend on which thread ran it or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a derived seed is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Data,
    HoldOut,
    Folds(usize),
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Data => 1,
            Purpose::HoldOut => 2,
            Purpose::Folds(v) => 0x100 + v as u64,
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for `purpose` in replication `replication` of a run with `base` seed.
pub fn derive_seed(base: u64, replication: u64, purpose: Purpose) -> u64 {
    splitmix(splitmix(splitmix(base) ^ replication) ^ purpose.tag())
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
