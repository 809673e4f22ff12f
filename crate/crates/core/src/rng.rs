//! Reproducible random streams for parallel Monte Carlo.
//!
//! Every random draw in the crate comes from a stream addressed by the triple
//! `(root seed, purpose tag, replica index)`. The root seed and the tag are
//! mixed into a 256-bit ChaCha key; the replica index selects the ChaCha
//! stream (nonce). The generator is counter based, so the output of a replica
//! does not depend on which worker runs it or in which order.
//!
//! Key derivation, for citing results:
//!
//! ```text
//! h    = fnv1a64(tag)
//! k[i] = splitmix64(seed ^ rotl(h, 17 * i) ^ i * 0x9e3779b97f4a7c15),  i = 0..4
//! key  = k[0] || k[1] || k[2] || k[3]   (little endian)
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Concrete generator handed to simulation code.
pub type Stream = ChaCha8Rng;

/// Purpose tags used inside the crate. Distinct tags give independent streams.
pub mod tags {
    pub const PATH: &str = "path";
    pub const JUMPS: &str = "jumps";
    pub const SKELETON: &str = "skeleton";
    pub const PERPETUITY: &str = "perpetuity";
    pub const ETA: &str = "eta";
    pub const EXP_TIME: &str = "exp-time";
    pub const DUAL: &str = "dual";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamFactory {
    seed: u64,
}

impl StreamFactory {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent factory for a named sub-experiment.
    pub fn derive(&self, tag: &str) -> StreamFactory {
        StreamFactory::new(splitmix64(self.seed ^ fnv1a64(tag).rotate_left(29)))
    }

    pub fn stream(&self, tag: &str, replica: u64) -> Stream {
        let mut rng = ChaCha8Rng::from_seed(self.key(tag));
        rng.set_stream(replica);
        rng
    }

    fn key(&self, tag: &str) -> [u8; 32] {
        let h = fnv1a64(tag);
        let mut key = [0u8; 32];
        for i in 0..4u64 {
            let word = splitmix64(
                self.seed ^ h.rotate_left(17 * i as u32) ^ i.wrapping_mul(0x9e37_79b9_7f4a_7c15),
            );
            key[(i as usize) * 8..(i as usize + 1) * 8].copy_from_slice(&word.to_le_bytes());
        }
        key
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a64(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}
