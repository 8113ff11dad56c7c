//! Seed schedule for reproducible, partition-independent random streams.
//!
//! A master seed is turned into a 64-bit key with SplitMix64. Each consumer
//! derives a child key by mixing in the FNV-1a hash of a label
//! (`"convolve"`, `"theta"`, ...). A concrete generator is a ChaCha8 keyed by
//! the child key with its 64-bit stream id set to a work-unit index (a row
//! chunk or a path). Work units are fixed by the data layout, never by the
//! number of worker threads, so results depend only on the seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for every stochastic operation in the crate.
pub type StreamRng = ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    label
        .bytes()
        .fold(FNV_OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// A node in the seed tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamSeed {
    key: u64,
}

impl StreamSeed {
    pub fn new(seed: u64) -> Self {
        Self {
            key: splitmix64(seed),
        }
    }

    /// Child node for a named consumer.
    pub fn derive(&self, label: &str) -> Self {
        Self {
            key: splitmix64(self.key ^ fnv1a(label)),
        }
    }

    /// Child node for a numbered consumer (e.g. the i-th check of a suite).
    pub fn derive_index(&self, index: u64) -> Self {
        Self {
            key: splitmix64(self.key ^ splitmix64(index ^ FNV_PRIME)),
        }
    }

    /// Generator for work unit `index`.
    pub fn stream(&self, index: u64) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.key);
        rng.set_stream(index);
        rng
    }

    /// A fresh `u64` seed for APIs that take a plain seed.
    pub fn seed_value(&self) -> u64 {
        self.key
    }
}
