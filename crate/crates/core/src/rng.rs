//! Deterministic, counter-derived random number streams.
//!
//! Every stochastic task (one chain of one gene in one replicate) owns its
//! own [`RngStream`], derived from the master seed and a [`StreamId`].
//! Streams never share state, so a scan parallelized over genes produces
//! bit-identical output regardless of thread count or execution order.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Identifies one independent stream within a run.
///
/// Dataset-level simulation uses the sentinel `gene = u64::MAX` so that
/// data generation and per-gene sampling never collide on a stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamId {
    pub replicate: u64,
    pub gene: u64,
    pub chain: u64,
}

impl StreamId {
    pub fn new(replicate: u64, gene: u64, chain: u64) -> Self {
        Self {
            replicate,
            gene,
            chain,
        }
    }

    /// Stream id for whole-dataset simulation of one replicate.
    pub fn simulation(replicate: u64) -> Self {
        Self {
            replicate,
            gene: u64::MAX,
            chain: 0,
        }
    }
}

/// SplitMix64 finalizer; full-period mixing of a 64-bit word.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A deterministic ChaCha12 stream keyed by `(seed, stream_id)`.
///
/// Identical `(seed, id)` pairs yield bit-identical sequences; distinct
/// ids yield statistically independent streams. The generator is a value
/// object: move it between threads, never share it.
#[derive(Clone, Debug)]
pub struct RngStream {
    inner: ChaCha12Rng,
    seed: u64,
    id: StreamId,
    antithetic: bool,
}

impl RngStream {
    pub fn new(seed: u64, id: StreamId) -> Self {
        // Fold the id into the key schedule one salted component at a
        // time so that permuted ids cannot collide.
        let mut state = seed;
        state = state.wrapping_add(mix_word(id.replicate, 0xD6E8_FEB8_6659_FD93));
        state = state.wrapping_add(mix_word(id.gene, 0xA5A3_5E4B_29F1_4D01));
        state = state.wrapping_add(mix_word(id.chain, 0x8F1B_BCDC_BFA5_3E0B));
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        Self {
            inner: ChaCha12Rng::from_seed(key),
            seed,
            id,
            antithetic: false,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn id(&self) -> StreamId {
        self.id
    }

    /// Uniform draw on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        rand::Rng::random::<f64>(&mut self.inner)
    }

    /// Negate all subsequent location-scale normal draws made through
    /// [`crate::dist::sample_normal`]. Used by antithetic-coupling tests.
    #[cfg(test)]
    pub(crate) fn set_antithetic(&mut self, on: bool) {
        self.antithetic = on;
    }

    pub(crate) fn antithetic(&self) -> bool {
        self.antithetic
    }
}

fn mix_word(x: u64, salt: u64) -> u64 {
    let mut s = x ^ salt;
    splitmix64(&mut s)
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
}
