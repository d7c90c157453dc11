//! Counter-based uniform streams.
//!
//! A stream is fixed by `(seed, stream id)`; draw `j` of it can be reached
//! directly, so replications never depend on execution order.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Stream id slot of the interarrival sequence; node `n` uses `1 + n`.
pub const INTERARRIVAL_SLOT: u64 = 0;

const SLOT_BITS: u32 = 20;

/// Stream id for one input sequence of one replication.
pub fn stream_id(replication: u64, slot: u64) -> u64 {
    debug_assert!(slot < 1 << SLOT_BITS);
    (replication << SLOT_BITS) | slot
}

/// Stream id slot of the service sequence of `node`.
pub fn service_slot(node: usize) -> u64 {
    1 + node as u64
}

#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha8Rng,
    antithetic: bool,
}

impl RandomStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            rng,
            antithetic: false,
        }
    }

    /// Stream positioned at draw `position`.
    pub fn at(seed: u64, stream: u64, position: u64) -> Self {
        let mut s = Self::new(seed, stream);
        s.rng.set_word_pos(2 * position as u128);
        s
    }

    /// The same stream returning `1 - u` for every draw `u`.
    pub fn antithetic(mut self) -> Self {
        self.antithetic = !self.antithetic;
        self
    }

    /// Index of the next draw.
    pub fn position(&self) -> u64 {
        (self.rng.get_word_pos() / 2) as u64
    }

    /// Next value in the open interval (0, 1). Values are odd multiples of
    /// 2^-53, so `1 - u` is exact.
    pub fn next_uniform(&mut self) -> f64 {
        let bits = self.rng.next_u64() >> 12;
        let u = (bits as f64 + 0.5) * (-52f64).exp2();
        if self.antithetic {
            1.0 - u
        } else {
            u
        }
    }
}
