//! Seeded random-number streams.
//!
//! Every randomized routine in this crate takes its randomness from an
//! [`RngStream`], a `(seed, stream)` pair that instantiates a counter-based
//! generator. The same pair always yields the same draw sequence, and
//! derived streams let independent units of work (ad-groups, scenario sets,
//! baselines) consume non-overlapping randomness regardless of the order or
//! thread they run on.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A reproducible random stream identified by `(seed, stream)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngStream { seed, stream }
    }

    /// Instantiates the generator. Identical `(seed, stream)` pairs produce
    /// bitwise-identical draw sequences.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Derives a child stream from a label, e.g. an ad-group id. The
    /// derivation is a stable hash, so it does not depend on iteration
    /// order or thread scheduling.
    pub fn derive(&self, label: &str) -> RngStream {
        RngStream {
            seed: self.seed,
            stream: fnv1a64(self.stream, label.as_bytes()),
        }
    }

    /// Derives a child stream from a numeric tag.
    pub fn derive_index(&self, tag: u64) -> RngStream {
        RngStream {
            seed: self.seed,
            stream: fnv1a64(self.stream, &tag.to_le_bytes()),
        }
    }
}

/// FNV-1a over `bytes`, folding `basis` into the initial state.
fn fnv1a64(basis: u64, bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ basis.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
