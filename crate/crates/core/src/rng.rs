//! Seeded, counter-addressable random streams.
//!
//! Every consumer derives its own ChaCha stream from the run seed and a
//! `(purpose, a, b)` tuple, so results do not depend on execution order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags occupying the top byte of a stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    ClientData = 1,
    TestData = 2,
    ClientSampling = 3,
    LocalUpdate = 4,
    Noise = 5,
    Quantize = 6,
    ShadowData = 7,
    ShadowTraining = 8,
    AuditData = 9,
    AuditSelection = 10,
    Scratch = 11,
}

/// Stream id for `(purpose, a, b)`; `a` gets 24 bits and `b` 32 bits.
pub fn stream_id(purpose: Purpose, a: u64, b: u64) -> u64 {
    ((purpose as u64) << 56) | ((a & 0x00ff_ffff) << 32) | (b & 0xffff_ffff)
}

/// A ChaCha8 generator positioned at the start of the given stream.
pub fn stream(seed: u64, purpose: Purpose, a: u64, b: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(purpose, a, b));
    rng
}

/// Same stream, advanced so the next `u64` drawn is draw number `index`.
pub fn stream_at(seed: u64, stream_id: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng.set_word_pos(u128::from(index) * 2);
    rng
}
