//! Pinned, counter-based random streams.
//!
//! Every stochastic routine draws from ChaCha8 keyed by a 64-bit master seed
//! (expanded with `SeedableRng::seed_from_u64`). Independent work items use
//! the ChaCha stream id as their counter, so item `i` sees the same numbers no
//! matter which worker evaluates it or in what order.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

/// Generator for a single sequential computation.
pub fn master(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for work item `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform draw on `[a, b]`. Intervals narrower than `1e-15` collapse to `a`.
pub fn uniform<R: rand::Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> f64 {
    if b - a < 1e-15 {
        return a;
    }
    let u: f64 = rng.random();
    (a + u * (b - a)).min(b)
}
