//! Seeded randomness. Every random choice in the crate flows from a single
//! `u64` seed through ChaCha8, a counter-based stream whose output is
//! identical on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::point::Point;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform sample from `[0, 1]^n`.
pub fn uniform_point(rng: &mut impl Rng, n: usize) -> Point {
    Point::new((0..n).map(|_| rng.gen::<f64>()).collect()).expect("uniform samples lie in [0,1)")
}

/// Uniform sample from `[lo, hi]^n`, used where strictly interior points are needed.
pub fn interior_point(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Point {
    Point::new((0..n).map(|_| rng.gen_range(lo..hi)).collect()).expect("interior samples lie in [0,1]")
}
