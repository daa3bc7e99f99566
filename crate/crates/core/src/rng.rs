//! Deterministic block-split random streams.
//!
//! Sample index `i` always comes from block `i / BLOCK`, and each block has
//! its own ChaCha stream keyed by the run seed. Results therefore do not
//! depend on how blocks are spread over threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const BLOCK: usize = 1 << 16;

pub fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// (block index, block length) pairs covering `n` draws.
pub fn blocks(n: usize) -> impl Iterator<Item = (u64, usize)> + Clone {
    let full = n / BLOCK;
    let rest = n % BLOCK;
    (0..full)
        .map(|b| (b as u64, BLOCK))
        .chain((rest > 0).then_some((full as u64, rest)))
}

/// Thread pool with a fixed worker count; `None` uses rayon's default.
pub fn pool(workers: Option<usize>) -> rayon::ThreadPool {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w.max(1));
    }
    builder.build().expect("thread pool")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn blocks_cover_exactly() {
        let total: usize = blocks(3 * BLOCK + 5).map(|b| b.1).sum();
        assert_eq!(total, 3 * BLOCK + 5);
        assert_eq!(blocks(BLOCK).count(), 1);
        assert_eq!(blocks(0).count(), 0);
    }

    #[test]
    fn streams_differ_and_repeat() {
        let a: u64 = block_rng(7, 0).random();
        let b: u64 = block_rng(7, 1).random();
        let c: u64 = block_rng(7, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }
}
