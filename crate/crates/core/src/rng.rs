//! Seed tree for reproducible randomness.
//!
//! Every random draw in the crate comes from a [`Rng`] node. A node is just a
//! 64-bit key; [`Rng::fork`] derives child keys with the SplitMix64 finalizer
//! so that episodes, particles and iterations each get an independent
//! substream regardless of how work is scheduled across threads.
//! [`Rng::stream`] turns a key into a ChaCha8 generator, which produces the
//! same sequence on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rng {
    key: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { key: splitmix64(seed) }
    }

    /// Node with exactly this key, e.g. an episode key stored in a dataset.
    pub fn from_key(key: u64) -> Self {
        Rng { key }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Child node for `label`. Distinct labels give unrelated streams.
    pub fn fork(&self, label: u64) -> Rng {
        Rng { key: splitmix64(self.key ^ splitmix64(label.wrapping_add(0xD1B5_4A32_D192_ED03))) }
    }

    /// Child node addressed by a path of labels.
    pub fn fork_path(&self, labels: &[u64]) -> Rng {
        labels.iter().fold(*self, |r, &l| r.fork(l))
    }

    pub fn stream(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.key)
    }
}
