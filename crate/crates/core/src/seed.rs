//! Counter-based seed splitting.
//!
//! Every random choice in an experiment is derived from one 64-bit root seed.
//! A [`Seeds`] value names a node in a tree of streams; `child(tag)` descends
//! one level by mixing the tag into the current key, so sibling streams never
//! depend on how many values another stream consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seeds {
    key: u64,
}

impl Seeds {
    pub fn new(root: u64) -> Self {
        Seeds {
            key: splitmix64(root),
        }
    }

    /// Derived stream for `tag`. Distinct tags give independent-looking keys.
    pub fn child(&self, tag: u64) -> Self {
        Seeds {
            key: splitmix64(self.key ^ splitmix64(tag.wrapping_add(0xA076_1D64_78BD_642F))),
        }
    }

    /// Two-level shortcut for `child(a).child(b)`.
    pub fn child2(&self, a: u64, b: u64) -> Self {
        self.child(a).child(b)
    }

    pub fn seed(&self) -> u64 {
        self.key
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.key)
    }
}

/// Tags used to separate the top-level streams of each scheme.
pub(crate) mod tag {
    pub const SIGNAL: u64 = 1;
    pub const SCHEME: u64 = 2;
    pub const SHRINK_H: u64 = 10;
    pub const SHRINK_S1: u64 = 11;
    pub const SHRINK_S2: u64 = 12;
    pub const SUBSAMPLE: u64 = 20;
    pub const LEVEL: u64 = 21;
    pub const SKETCH_ROW: u64 = 30;
    pub const SKETCH_SIGN: u64 = 31;
    pub const REDUCE_H: u64 = 40;
    pub const REDUCE_SIGMA: u64 = 41;
    pub const ROUND_ONE: u64 = 42;
    pub const ROUND_TWO: u64 = 43;
    pub const DUP_REPETITION: u64 = 50;
    pub const DUP_UNIFORM: u64 = 51;
    pub const DUP_PARTITION: u64 = 52;
    pub const DUP_PART: u64 = 53;
}
