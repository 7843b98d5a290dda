//! Deterministic random streams.
//!
//! Every random decision draws from a ChaCha8 stream (`rand_chacha` 0.3).
//! The 256-bit key comes from the run seed via `SeedableRng::seed_from_u64`
//! (the PCG32-based expansion documented in `rand_core` 0.6); the 64-bit
//! stream id is
//!
//! ```text
//! stream = generation << 32 | purpose << 24 | index      (index < 2^24)
//! ```
//!
//! so each (generation, purpose, index) cell gets its own independent
//! sequence and results do not depend on evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. The discriminant is part of the stream id and
/// must not change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    InitPrimary = 1,
    InitSecondary = 2,
    Sampling = 3,
    Mitosis = 4,
    Pairing = 5,
    Meiosis = 6,
    Selection = 7,
    Variation = 8,
    Swarm = 9,
}

const INDEX_BITS: u32 = 24;

pub fn stream_id(generation: u32, purpose: Purpose, index: u32) -> u64 {
    assert!(
        index < (1 << INDEX_BITS),
        "stream index {index} exceeds 2^24"
    );
    (u64::from(generation) << 32) | (u64::from(purpose as u8) << INDEX_BITS) | u64::from(index)
}

pub fn substream(seed: u64, generation: u32, purpose: Purpose, index: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(generation, purpose, index));
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = substream(7, 3, Purpose::Mitosis, 11).next_u64();
        let b = substream(7, 3, Purpose::Mitosis, 11).next_u64();
        let c = substream(7, 3, Purpose::Mitosis, 12).next_u64();
        let d = substream(7, 4, Purpose::Mitosis, 11).next_u64();
        let e = substream(8, 3, Purpose::Mitosis, 11).next_u64();
        assert_eq!(a, b);
        assert!(a != c && a != d && a != e);
    }

    #[test]
    fn stream_layout() {
        assert_eq!(stream_id(1, Purpose::Meiosis, 5), (1 << 32) | (6 << 24) | 5);
    }

    #[test]
    fn known_answer() {
        // Pins the generator so traces stay comparable across releases.
        let mut rng = substream(42, 0, Purpose::InitPrimary, 0);
        let first = rng.next_u64();
        let mut again = ChaCha8Rng::seed_from_u64(42);
        again.set_stream(1 << 24);
        assert_eq!(first, again.next_u64());
        assert_eq!(first, 12_684_197_727_541_009_461);
    }
}
