//! Seed derivation.
//!
//! Every random component draws from its own ChaCha stream. Streams are
//! derived from one master seed by fixed labelled offsets, so the explanation
//! subsample, the baseline sample and the sliced projections never share
//! randomness while the whole run stays reproducible from a single number.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Subsample,
    Baseline,
    Projections,
    Data,
    Model,
    Explainer,
    Repeat(u64),
}

impl Stream {
    fn offset(self) -> u64 {
        match self {
            Stream::Subsample => 0x5eed_0001,
            Stream::Baseline => 0x5eed_0002,
            Stream::Projections => 0x5eed_0003,
            Stream::Data => 0x5eed_0004,
            Stream::Model => 0x5eed_0005,
            Stream::Explainer => 0x5eed_0006,
            Stream::Repeat(i) => 0x7e9e_0000_0000u64.wrapping_add(i.wrapping_mul(0x9e37_79b9)),
        }
    }
}

/// Seed of a labelled component stream.
pub fn derive_seed(master: u64, stream: Stream) -> u64 {
    // splitmix64 finalizer over the offset master seed
    let mut z = master.wrapping_add(stream.offset()).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream_rng(master: u64, stream: Stream) -> Rng {
    rng_from_seed(derive_seed(master, stream))
}
