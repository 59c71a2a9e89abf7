//! Deterministic random streams.
//!
//! Every stochastic quantity is drawn from a ChaCha8 stream keyed by the
//! master seed and a [`Domain`] tag, with the ChaCha stream id set to the
//! sub-ensemble index. Sub-ensembles therefore never share randomness and can
//! be generated in any order or in parallel with identical results.
//!
//! Gaussian variates always come from [`rand_distr::StandardNormal`]
//! (ziggurat), the single normal transform used across the crate.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

/// What a stream is used for. Streams with different domains are independent
/// even for the same seed and index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Input,
    NetworkNoise,
    HaarUnitary,
    Patterns,
}

impl Domain {
    const fn tag(self) -> u64 {
        match self {
            Domain::Input => 0x51a3_5e71_9c0d_0001,
            Domain::NetworkNoise => 0x51a3_5e71_9c0d_0002,
            Domain::HaarUnitary => 0x51a3_5e71_9c0d_0003,
            Domain::Patterns => 0x51a3_5e71_9c0d_0004,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream `index` of `domain` under the master `seed`.
pub fn substream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut state = splitmix64(seed) ^ domain.tag();
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

#[inline]
pub fn normal<R: RngCore>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}
