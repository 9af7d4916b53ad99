//! Grid double greedy for unconstrained maximization over `[0, 1]^n`, and its
//! use for maximization over a box `[0, ceiling]`.
//!
//! Two vectors start at `x = 0` and `y = 1`. Coordinates are visited once
//! each; at coordinate `u` the best grid raise `a` of `x` and the best grid cut
//! `b` of `y` are found, and both vectors are set to the weighted point
//! `w = (Δa·a + γΔb·(1 − b)) / (Δa + γΔb)`.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{eval, Objective, Restricted};
use crate::point::Point;
use crate::sampling::rng;

/// Threshold below which `Δa + γΔb` counts as zero.
pub const FLAT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CoordinateOrder {
    #[default]
    Natural,
    /// A permutation drawn from the given seed.
    Seeded(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DoubleGreedyOptions {
    pub order: CoordinateOrder,
    /// When both gains vanish, set the coordinate to 0 instead of `1 − b`.
    pub flat_to_zero: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinateRecord {
    pub coordinate: usize,
    pub a: f64,
    pub b: f64,
    pub delta_a: f64,
    pub delta_b: f64,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoubleGreedyTrace {
    pub final_point: Point,
    pub records: Vec<CoordinateRecord>,
    /// Spacing `ε'/n` of the grid `V`.
    pub grid_step: f64,
    pub epsilon_used: f64,
}

/// Replaces `ε` by `1 / (2⌈ε⁻¹⌉)` unless `ε⁻¹` already is an even integer.
pub fn normalize_epsilon(epsilon: f64) -> f64 {
    let inv = 1.0 / epsilon;
    let nearest = inv.round();
    if (inv - nearest).abs() < 1e-9 && (nearest as u64).is_multiple_of(2) && nearest >= 2.0 {
        1.0 / nearest
    } else {
        1.0 / (2.0 * (inv - 1e-9).ceil())
    }
}

pub fn double_greedy<F: Objective + ?Sized>(f: &F, gamma: f64, epsilon: f64) -> Result<DoubleGreedyTrace> {
    double_greedy_with(f, gamma, epsilon, DoubleGreedyOptions::default())
}

pub fn double_greedy_with<F: Objective + ?Sized>(
    f: &F,
    gamma: f64,
    epsilon: f64,
    options: DoubleGreedyOptions,
) -> Result<DoubleGreedyTrace> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Parameter(format!("epsilon must lie in (0,1), got {epsilon}")));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Parameter(format!("gamma must lie in (0,1], got {gamma}")));
    }
    let n = f.dim();
    if n == 0 {
        return Err(Error::Parameter("double greedy needs dimension >= 1".into()));
    }
    let epsilon_used = normalize_epsilon(epsilon);
    // V = { j/K : 0 ≤ j ≤ K } with K = n/ε' an integer.
    let steps = n * (1.0 / epsilon_used).round() as usize;
    let grid = |j: usize| j as f64 / steps as f64;

    let mut order: Vec<usize> = (0..n).collect();
    if let CoordinateOrder::Seeded(seed) = options.order {
        order.shuffle(&mut rng(seed));
    }

    let mut x = Point::zeros(n);
    let mut y = Point::ones(n);
    let mut records = Vec::with_capacity(n);
    for &u in &order {
        let fx = eval(f, &x)?;
        let fy = eval(f, &y)?;
        let (mut a, mut best_a) = (0.0, fx);
        let (mut b, mut best_b) = (0.0, fy);
        for j in 1..=steps {
            let v = grid(j);
            let up = eval(f, &x.with_coord(u, v)?)?;
            if up > best_a {
                a = v;
                best_a = up;
            }
            let down = eval(f, &y.with_coord(u, grid(steps - j))?)?;
            if down > best_b {
                b = v;
                best_b = down;
            }
        }
        let delta_a = best_a - fx;
        let delta_b = best_b - fy;
        let total = delta_a + gamma * delta_b;
        let w = if total > FLAT_TOL {
            (delta_a * a + gamma * delta_b * (1.0 - b)) / total
        } else if options.flat_to_zero {
            0.0
        } else {
            1.0 - b
        };
        x = x.with_coord(u, w)?;
        y = y.with_coord(u, w)?;
        records.push(CoordinateRecord {
            coordinate: u,
            a,
            b,
            delta_a,
            delta_b,
            w,
        });
    }
    debug_assert_eq!(x, y);
    Ok(DoubleGreedyTrace {
        final_point: x,
        records,
        grid_step: 1.0 / steps as f64,
        epsilon_used,
    })
}

/// Maximizes over `[0, ceiling]` by running double greedy on `a ↦ F(ceiling ⊙ a)`
/// and mapping the answer back. The result is `≤ ceiling` coordinatewise.
pub fn box_maximize<F: Objective + ?Sized>(f: &F, gamma: f64, epsilon: f64, ceiling: &Point) -> Result<Point> {
    box_maximize_with(f, gamma, epsilon, ceiling, DoubleGreedyOptions::default())
}

pub fn box_maximize_with<F: Objective + ?Sized>(
    f: &F,
    gamma: f64,
    epsilon: f64,
    ceiling: &Point,
    options: DoubleGreedyOptions,
) -> Result<Point> {
    let restricted = Restricted::new(f, ceiling.clone())?;
    let trace = double_greedy_with(&restricted, gamma, epsilon, options)?;
    ceiling.hadamard(&trace.final_point)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnbalancedBound {
    pub r_star: f64,
    pub bound: f64,
}

/// Upper end of the `r` search range.
pub const R_SEARCH_MAX: f64 = 100.0;

/// `max_{r ≥ 0} [(2γ^{3/2} − 4εγ^{9/2})·r·F(o) + F(0) + r²·F(1)] / (r² + 2γ^{3/2}r + 1)`,
/// searched over `r ∈ [0, 100]`.
pub fn unbalanced_bound(f_o: f64, f_zero: f64, f_one: f64, gamma: f64, epsilon: f64) -> UnbalancedBound {
    let g15 = gamma.powf(1.5);
    let lead = 2.0 * g15 - 4.0 * epsilon * gamma.powf(4.5);
    let value = |r: f64| (lead * r * f_o + f_zero + r * r * f_one) / (r * r + 2.0 * g15 * r + 1.0);

    // Coarse scan, then golden-section refinement of the best bracket.
    const SCAN: usize = 20_000;
    let step = R_SEARCH_MAX / SCAN as f64;
    let mut best_k = 0;
    let mut best_v = value(0.0);
    for k in 1..=SCAN {
        let v = value(k as f64 * step);
        if v > best_v {
            best_k = k;
            best_v = v;
        }
    }
    let mut lo = (best_k as f64 - 1.0).max(0.0) * step;
    let mut hi = ((best_k + 1) as f64 * step).min(R_SEARCH_MAX);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - phi * (hi - lo);
    let mut d = lo + phi * (hi - lo);
    while hi - lo > 1e-9 {
        if value(c) >= value(d) {
            hi = d;
        } else {
            lo = c;
        }
        c = hi - phi * (hi - lo);
        d = lo + phi * (hi - lo);
    }
    let mid = 0.5 * (lo + hi);
    [(0.0, value(0.0)), (best_k as f64 * step, best_v), (mid, value(mid)), (R_SEARCH_MAX, value(R_SEARCH_MAX))]
        .into_iter()
        .fold(UnbalancedBound { r_star: 0.0, bound: f64::NEG_INFINITY }, |acc, (r, v)| {
            if v > acc.bound {
                UnbalancedBound { r_star: r, bound: v }
            } else {
                acc
            }
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{ConstantObjective, QuadraticObjective};

    fn parabola() -> QuadraticObjective {
        // x(1 − x)
        QuadraticObjective::new(vec![vec![-2.0]], vec![1.0], 0.0).unwrap()
    }

    #[test]
    fn epsilon_normalization() {
        assert_eq!(normalize_epsilon(0.5), 0.5);
        assert_eq!(normalize_epsilon(0.25), 0.25);
        assert_eq!(normalize_epsilon(0.3), 0.125);
        assert_eq!(normalize_epsilon(1.0 / 3.0), 1.0 / 6.0);
        assert_eq!(normalize_epsilon(0.1), 0.1);
    }

    #[test]
    fn parabola_on_three_point_grid() {
        let t = double_greedy(&parabola(), 1.0, 0.5).unwrap();
        assert_eq!(t.grid_step, 0.5);
        let r = &t.records[0];
        assert_eq!((r.a, r.b), (0.5, 0.5));
        assert_eq!((r.delta_a, r.delta_b), (0.25, 0.25));
        assert_eq!(r.w, 0.5);
        assert_eq!(t.final_point[0], 0.5);
        assert_eq!(parabola().value(&t.final_point), 0.25);
    }

    #[test]
    fn constant_objective_takes_flat_branch() {
        let f = ConstantObjective { dim: 3, value: 2.5 };
        let t = double_greedy(&f, 0.7, 0.3).unwrap();
        assert!(t.records.iter().all(|r| r.delta_a == 0.0 && r.delta_b == 0.0 && r.b == 0.0 && r.w == 1.0));
        assert_eq!(f.value(&t.final_point), 2.5);
        let opts = DoubleGreedyOptions { flat_to_zero: true, ..Default::default() };
        let t0 = double_greedy_with(&f, 0.7, 0.3, opts).unwrap();
        assert_eq!(t0.final_point, Point::zeros(3));
    }

    #[test]
    fn monotone_linear_goes_to_one() {
        let f = QuadraticObjective::new(vec![vec![0.0; 2]; 2], vec![1.0, 1.0], 0.0).unwrap();
        let t = double_greedy(&f, 1.0, 0.5).unwrap();
        for r in &t.records {
            assert_eq!((r.a, r.delta_a, r.b, r.delta_b, r.w), (1.0, 1.0, 0.0, 0.0, 1.0));
        }
        assert_eq!(t.final_point, Point::ones(2));
        assert_eq!(f.value(&t.final_point), 2.0);
    }

    #[test]
    fn seeded_order_visits_every_coordinate_once() {
        let f = QuadraticObjective::new(vec![vec![-1.0, -0.5, 0.0], vec![-0.5, -1.0, 0.0], vec![0.0, 0.0, -2.0]], vec![1.0, 0.8, 1.2], 0.0).unwrap();
        let opts = DoubleGreedyOptions { order: CoordinateOrder::Seeded(7), ..Default::default() };
        let t = double_greedy_with(&f, 1.0, 0.25, opts).unwrap();
        let mut seen: Vec<usize> = t.records.iter().map(|r| r.coordinate).collect();
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2]);
    }

    #[test]
    fn box_maximize_examples() {
        let f = parabola();
        let full = box_maximize(&f, 1.0, 0.5, &Point::ones(1)).unwrap();
        assert_eq!(full, double_greedy(&f, 1.0, 0.5).unwrap().final_point);
        assert_eq!(box_maximize(&f, 1.0, 0.5, &Point::zeros(1)).unwrap(), Point::zeros(1));
        let half = Point::new(vec![0.5]).unwrap();
        assert_eq!(box_maximize(&f, 1.0, 0.5, &half).unwrap(), half);
    }

    #[test]
    fn unbalanced_bound_recovers_one_half() {
        let ub = unbalanced_bound(1.0, 0.0, 0.0, 1.0, 1e-12);
        assert!((ub.r_star - 1.0).abs() < 1e-6);
        assert!((ub.bound - 0.5).abs() < 1e-12);
    }

    #[test]
    fn unbalanced_bound_tends_to_one_with_large_r() {
        let ub = unbalanced_bound(0.0, 0.0, 1.0, 0.5, 0.1);
        assert_eq!(ub.r_star, R_SEARCH_MAX);
        assert!(ub.bound >= 0.99);
    }

    #[test]
    fn unbalanced_bound_matches_dense_scan() {
        // Oracle: scan r ∈ [0, 10] with step 1e-4.
        let (gamma, eps) = (0.5f64, 0.01);
        let lead = 2.0 * gamma.powf(1.5) - 4.0 * eps * gamma.powf(4.5);
        let scan = (0..=100_000)
            .map(|k| {
                let r = k as f64 * 1e-4;
                lead * r / (r * r + 2.0 * gamma.powf(1.5) * r + 1.0)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let ub = unbalanced_bound(1.0, 0.0, 0.0, gamma, eps);
        assert!((ub.bound - scan).abs() < 1e-8);
        assert!((ub.bound - 0.260_551).abs() < 1e-6);
        assert!((ub.r_star - 1.0).abs() < 1e-4);
    }

    fn grid_max<F: Objective>(f: &F, ceiling: &Point, k: usize) -> f64 {
        crate::verify::grid_maximum(f, ceiling, k).unwrap()
    }

    #[test]
    fn unbalanced_guarantee_against_brute_force() {
        let mut r = crate::sampling::rng(21);
        for trial in 0..30 {
            let n = 1 + trial % 3;
            let inst = crate::verify::random_instance(&mut r, n).unwrap();
            let f = &inst.objective;
            let eps = [0.1, 0.25, 0.5][trial % 3];
            let t = double_greedy(f, inst.gamma, eps).unwrap();
            let ones = Point::ones(n);
            let bound = unbalanced_bound(grid_max(f, &ones, 10), f.value(&Point::zeros(n)), f.value(&ones), inst.gamma, t.epsilon_used);
            assert!(f.value(&t.final_point) >= bound.bound - 1e-7, "trial {trial}");
        }
    }

    #[test]
    fn box_guarantee_against_brute_force() {
        let mut r = crate::sampling::rng(22);
        for trial in 0..30 {
            let n = 1 + trial % 3;
            let inst = crate::verify::random_instance(&mut r, n).unwrap();
            let f = &inst.objective;
            let ceiling = crate::sampling::uniform_point(&mut r, n);
            let y = box_maximize(f, inst.gamma, 0.1, &ceiling).unwrap();
            assert!(y.le(&ceiling));
            let bound = unbalanced_bound(grid_max(f, &ceiling, 10), f.value(&Point::zeros(n)), f.value(&ceiling), inst.gamma, 0.1);
            assert!(f.value(&y) >= bound.bound - 1e-7, "trial {trial}");
        }
    }

    #[test]
    fn trace_invariants() {
        let mut r = crate::sampling::rng(23);
        for trial in 0..20 {
            let n = 1 + trial % 4;
            let inst = crate::verify::random_instance(&mut r, n).unwrap();
            let opts = DoubleGreedyOptions { order: CoordinateOrder::Seeded(trial as u64), ..Default::default() };
            let t = double_greedy_with(&inst.objective, inst.gamma, 0.3, opts).unwrap();
            let steps = (1.0 / t.grid_step).round();
            for rec in &t.records {
                assert!(rec.delta_a >= 0.0 && rec.delta_b >= 0.0);
                assert!((0.0..=1.0).contains(&rec.w));
                assert_eq!((rec.a * steps).round() / steps, rec.a);
                assert_eq!((rec.b * steps).round() / steps, rec.b);
                assert_eq!(t.final_point[rec.coordinate], rec.w);
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(double_greedy(&parabola(), 1.0, 1.0).is_err());
        assert!(double_greedy(&parabola(), 0.0, 0.5).is_err());
    }
}
