use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A reproducible random stream: a ChaCha8 key derived from `seed` plus a
/// stream id. Children created with [`SeededStream::split`] are independent
/// streams, so parallel replications never share state and results do not
/// depend on scheduling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeededStream {
    pub seed: u64,
    pub stream: u64,
}

impl SeededStream {
    pub const ALGORITHM: &'static str = "chacha8";

    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Child stream `index`. The child key hashes this stream's (seed, stream)
    /// pair, so `split(i)` of distinct parents never collide in practice.
    pub fn split(&self, index: u64) -> SeededStream {
        SeededStream {
            seed: splitmix64(self.seed ^ splitmix64(self.stream ^ 0xA076_1D64_78BD_642F)),
            stream: index,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
