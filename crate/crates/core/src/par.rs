//! Deterministic data-parallel helpers.
//!
//! Monte Carlo work is split into fixed-size chunks. Chunk `i` draws from its
//! own ChaCha stream, and chunk results are combined in index order, so
//! results do not depend on the number of worker threads or on whether the
//! `parallel` feature is enabled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Draws per Monte Carlo chunk.
pub const CHUNK: usize = 2048;

/// RNG for one chunk of a seeded computation.
pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Mixes a base seed with an index (SplitMix64 finalizer) to give
/// independent seeds for separate tasks.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `f(rng, n)` over `draws` split into chunks and returns the chunk
/// results in order.
pub fn map_chunks<T, F>(draws: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync + Send,
{
    let chunks = draws.div_ceil(CHUNK);
    let run = |c: usize| {
        let n = CHUNK.min(draws - c * CHUNK);
        let mut rng = chunk_rng(seed, c as u64);
        f(&mut rng, n)
    };
    map_indexed(chunks, run)
}

/// Applies `f` to 0..n, in parallel when enabled, preserving order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Sequential reference of [`map_chunks`], always single-threaded.
pub fn map_chunks_sequential<T, F>(draws: usize, seed: u64, f: F) -> Vec<T>
where
    F: Fn(&mut ChaCha8Rng, usize) -> T,
{
    (0..draws.div_ceil(CHUNK))
        .map(|c| {
            let n = CHUNK.min(draws - c * CHUNK);
            let mut rng = chunk_rng(seed, c as u64);
            f(&mut rng, n)
        })
        .collect()
}

/// Running sums for a mean and its standard error.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: f64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1.0;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, o: &Moments) {
        self.n += o.n;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n
    }

    /// Standard error of the mean.
    pub fn se(&self) -> f64 {
        if self.n < 2.0 {
            return 0.0;
        }
        let m = self.mean();
        let var = ((self.sum_sq - self.n * m * m) / (self.n - 1.0)).max(0.0);
        (var / self.n).sqrt()
    }
}
