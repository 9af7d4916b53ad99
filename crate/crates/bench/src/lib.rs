//! Seeded fixtures shared by the benchmarks.

use weakdr::sampling::rng;
use weakdr::verify::{random_dr_quadratic, random_instance, CertifiedInstance};
use weakdr::{Body, QuadraticObjective};

/// A certified random instance of dimension `n`.
pub fn instance(n: usize, seed: u64) -> CertifiedInstance {
    random_instance(&mut rng(seed), n).expect("generator parameters are valid")
}

pub fn dr_quadratic(n: usize, seed: u64) -> QuadraticObjective {
    random_dr_quadratic(&mut rng(seed), n).expect("generator parameters are valid")
}

/// `{x ∈ [0,1]^n : Σ wᵢxᵢ ≤ n/3}` with weights `1, 2, …, n` scaled to mean 1.
pub fn knapsack(n: usize) -> Body {
    let mean = (n + 1) as f64 / 2.0;
    let weights = (1..=n).map(|i| i as f64 / mean).collect();
    Body::knapsack(weights, n as f64 / 3.0).expect("weights are positive")
}

/// Two dense rows, which routes the linear oracle through the simplex solver.
pub fn two_row_polytope(n: usize) -> Body {
    let a: Vec<f64> = (0..n).map(|i| 0.5 + (i % 3) as f64 * 0.25).collect();
    let b: Vec<f64> = (0..n).map(|i| 1.0 - (i % 4) as f64 * 0.2).collect();
    Body::polytope(vec![a, b], vec![n as f64 / 4.0, n as f64 / 5.0]).expect("rows are nonnegative")
}
