use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Tags for the last element of a stream path, naming what the stream feeds.
pub mod purpose {
    pub const STUDY: u64 = 1;
    pub const LAYOUT: u64 = 2;
    pub const DATA: u64 = 3;
    pub const BOOTSTRAP: u64 = 4;
    pub const QMC: u64 = 5;
    pub const ALTERNATIVE: u64 = 6;
    pub const EXAMPLE: u64 = 7;
}

/// A named, reproducible random stream.
///
/// The generator for a stream is derived from the master seed and the full
/// path alone, so two streams with the same `(seed, path)` always yield the
/// same sequence regardless of which thread asks for it or in what order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RngStream {
    seed: u64,
    path: Vec<u64>,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            path: Vec::new(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    /// Stream one level deeper.
    pub fn child(&self, tag: u64) -> Self {
        let mut path = Vec::with_capacity(self.path.len() + 1);
        path.extend_from_slice(&self.path);
        path.push(tag);
        Self {
            seed: self.seed,
            path,
        }
    }

    pub fn descend(&self, tags: &[u64]) -> Self {
        let mut path = self.path.clone();
        path.extend_from_slice(tags);
        Self {
            seed: self.seed,
            path,
        }
    }

    fn key(&self) -> [u8; 32] {
        let mut h = splitmix(self.seed);
        for (depth, &tag) in self.path.iter().enumerate() {
            h = splitmix(h ^ splitmix(tag.wrapping_add((depth as u64 + 1).wrapping_mul(GOLDEN))));
        }
        let mut key = [0u8; 32];
        let mut state = h;
        for chunk in key.chunks_exact_mut(8) {
            state = splitmix(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        key
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::from_seed(self.key())
    }
}
