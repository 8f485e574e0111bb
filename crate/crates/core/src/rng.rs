//! Counter-keyed random substreams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream selected by
//! `(seed, stage, index)`: the seed and stage form the key, the index picks
//! one of the 2^64 ChaCha streams under that key. A shot's randomness is
//! therefore independent of which worker produced it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// What a substream is used for. Distinct stages never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stage {
    CorrelationState = 1,
    CorrelationNoise = 2,
    CalibrationState = 3,
    CalibrationNoise = 4,
    QutritState = 5,
    QutritNoise = 6,
    Bootstrap = 7,
    /// Harness-level seed derivation.
    SeedDerivation = 8,
}

/// Stream for `index` within `(seed, stage)`.
pub fn substream(seed: u64, stage: Stage, index: u64) -> StreamRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(stage as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Child seed for `(parent, a, b)`, e.g. sweep point `a`, repetition `b`.
pub fn derive_seed(parent: u64, a: u64, b: u64) -> u64 {
    use rand::RngCore;
    let mut rng = substream(parent, Stage::SeedDerivation, a);
    rng.set_word_pos(u128::from(b) * 2);
    rng.next_u64()
}
