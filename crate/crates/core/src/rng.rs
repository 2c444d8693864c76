//! Portable placement RNG.
//!
//! Xoshiro256++ seeded through SplitMix64. Relays and wardens draw from two
//! non-overlapping streams (the warden stream is the relay stream advanced by
//! one 2^128 jump), so growing one population never moves the other.

use rand_xoshiro::rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

const TWO_POW_NEG_53: f64 = 1.0 / (1u64 << 53) as f64;

#[derive(Clone, Debug)]
pub(crate) struct PlacementRng(Xoshiro256PlusPlus);

impl PlacementRng {
    /// Returns the `(relay, warden)` stream pair for `seed`.
    pub(crate) fn streams(seed: u64) -> (Self, Self) {
        let relays = Xoshiro256PlusPlus::seed_from_u64(seed);
        let mut wardens = relays.clone();
        wardens.jump();
        (Self(relays), Self(wardens))
    }

    /// Uniform draw in `[0, 1)` from the top 53 bits of one output word.
    pub(crate) fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * TWO_POW_NEG_53
    }
}
