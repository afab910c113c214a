//! Counter-addressed random streams.
//!
//! A stream is identified by a master seed and an integer path such as
//! `(generation, individual, replicate)`. The path is hashed into the
//! ChaCha stream selector, so any two distinct paths yield independent
//! sequences and a given path always reproduces the same sequence no
//! matter which thread or in which order it is opened.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    master_seed: u64,
    path: Vec<u64>,
}

impl RngStream {
    pub fn new(master_seed: u64) -> Self {
        RngStream { master_seed, path: Vec::new() }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    /// Sub-stream one level below this one.
    pub fn child(&self, id: u64) -> Self {
        let mut path = self.path.clone();
        path.push(id);
        RngStream { master_seed: self.master_seed, path }
    }

    pub fn derive(&self, ids: &[u64]) -> Self {
        let mut path = self.path.clone();
        path.extend_from_slice(ids);
        RngStream { master_seed: self.master_seed, path }
    }

    fn path_hash(&self) -> u64 {
        // Length-prefixed so that `[]`, `[0]` and `[0, 0]` differ.
        let mut h = splitmix64(self.path.len() as u64 ^ 0xD1B5_4A32_D192_ED03);
        for &id in &self.path {
            h = splitmix64(h ^ splitmix64(id));
        }
        h
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        let mut s = self.master_seed;
        for chunk in key.chunks_exact_mut(8) {
            s = splitmix64(s);
            chunk.copy_from_slice(&s.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.path_hash());
        rng
    }

    /// A 64-bit integer summarizing the stream, for consumers that take a
    /// plain integer seed (external evaluators).
    pub fn seed_u64(&self) -> u64 {
        splitmix64(splitmix64(self.master_seed) ^ self.path_hash())
    }
}
