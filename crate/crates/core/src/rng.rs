//! Keyed random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream whose 256-bit
//! key is `(seed, a, b, purpose)`. Streams for different epochs, views or
//! purposes are independent, so the order in which they are consumed never
//! changes their contents.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    EdgeDrop = 1,
    FeatureMask = 2,
    Init = 3,
    KMeans = 4,
}

pub fn keyed_rng(seed: u64, a: u64, b: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    for (chunk, word) in key
        .chunks_exact_mut(8)
        .zip([seed, a, b, purpose as u64])
    {
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
