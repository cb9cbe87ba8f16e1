//! Per-node reproducible backoff streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One independent ChaCha8 stream per node, all derived from a single seed.
///
/// A node only consumes its own stream, and only when it needs a fresh
/// backoff, so two simulators that make the same per-node draw requests see
/// identical values regardless of how they interleave nodes.
#[derive(Debug, Clone)]
pub struct BackoffStreams {
    streams: Vec<ChaCha8Rng>,
}

impl BackoffStreams {
    pub fn new(seed: u64, n: usize) -> Self {
        let streams = (0..n)
            .map(|i| {
                let mut r = ChaCha8Rng::seed_from_u64(seed);
                r.set_stream(i as u64);
                r
            })
            .collect();
        Self { streams }
    }

    pub fn len(&self) -> usize {
        self.streams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.streams.is_empty()
    }

    /// Uniform draw from `{1, ..., w}` on node `i`'s stream.
    pub fn draw(&mut self, i: usize, w: u32) -> u64 {
        self.streams[i].random_range(1..=w as u64)
    }
}
