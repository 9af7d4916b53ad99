//! Fixed-step Frank–Wolfe search for an approximate local maximum, and the
//! lattice value bound that such a point satisfies.
//!
//! Starting from a feasible `x(0)`, the routine runs `⌈δ⁻²⌉` steps
//! `x(i) = (1 − δ)·x(i−1) + δ·z(i)` where `z(i)` maximizes `⟨·, ∇F(x(i−1))⟩`
//! over the body, and returns the iterate `x(i*−1)` whose Frank–Wolfe gap
//! `⟨z(i) − x(i−1), ∇F(x(i−1))⟩` is smallest. That gap bounds
//! `⟨y − x, ∇F(x)⟩` for every feasible `y`, and is itself at most
//! `δ·[max F + L·D²/2]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{eval, grad, Objective};
use crate::point::Point;
use crate::polytope::{Body, Halfspace};

/// Feasibility tolerance applied to every iterate.
pub const ITERATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalMaxResult {
    pub point: Point,
    /// `δ·[F_max_seen + L·D²/2]`.
    pub certificate_bound: f64,
    pub iterations_used: usize,
    pub min_fw_gap: f64,
    /// Largest objective value over all iterates.
    pub max_value_seen: f64,
    /// Linear-oracle answers `z(1), …, z(T)`.
    pub lp_vertices: Vec<Point>,
}

/// `⌈δ⁻²⌉`, tolerant of `δ⁻²` landing a hair above an integer.
pub fn iteration_count(delta: f64) -> usize {
    (1.0 / (delta * delta) - 1e-9).ceil().max(1.0) as usize
}

pub fn fw_local_max<F: Objective + ?Sized>(
    f: &F,
    body: &Body,
    extra: Option<&Halfspace>,
    delta: f64,
    start: Option<&Point>,
) -> Result<LocalMaxResult> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Parameter(format!("delta must lie in (0,1), got {delta}")));
    }
    let n = body.dim();
    if f.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: f.dim(),
        });
    }
    let inside = |x: &Point| body.is_feasible(x, ITERATE_TOL) && extra.is_none_or(|h| h.contains(x, ITERATE_TOL));

    let mut x = match start {
        Some(s) => {
            s.check_dim(n)?;
            if !inside(s) {
                return Err(Error::Precondition("start point is not feasible".into()));
            }
            s.clone()
        }
        None => {
            let origin = Point::zeros(n);
            if inside(&origin) {
                origin
            } else {
                // 0 is cut off by the half-space: start from the point that satisfies it best.
                let h = extra.expect("origin is always in a down-closed body");
                body.lp_maximize(&h.normal, extra)?.point
            }
        }
    };

    let iterations = iteration_count(delta);
    let mut max_value_seen = eval(f, &x)?;
    let mut best: Option<(f64, Point)> = None;
    let mut lp_vertices = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let g = grad(f, &x)?;
        let z = body.lp_maximize(&g, extra)?.point;
        let gap = z.dot(&g) - x.dot(&g);
        if best.as_ref().is_none_or(|(b, _)| gap < *b) {
            best = Some((gap, x.clone()));
        }
        let next = Point::new(
            x.iter()
                .zip(z.iter())
                .map(|(a, b)| (1.0 - delta) * a + delta * b)
                .collect(),
        )?;
        if !inside(&next) {
            return Err(Error::Precondition("Frank-Wolfe iterate left the feasible region".into()));
        }
        lp_vertices.push(z);
        x = next;
        max_value_seen = max_value_seen.max(eval(f, &x)?);
    }
    let (min_fw_gap, point) = best.expect("at least one iteration");
    let d = body.diameter().value;
    Ok(LocalMaxResult {
        point,
        certificate_bound: delta * (max_value_seen + f.smoothness() * d * d / 2.0),
        iterations_used: iterations,
        min_fw_gap,
        max_value_seen,
        lp_vertices,
    })
}

/// Checks `F(x) ≥ [γ²F(x∨y) + F(x∧y)]/(1+γ²) − slack·γ/(1+γ²) − 1e-7`, the
/// value bound implied by `⟨y − x, ∇F(x)⟩ ≤ slack`.
pub fn lattice_bound_check<F: Objective + ?Sized>(
    f: &F,
    x: &Point,
    y: &Point,
    gamma: f64,
    slack: f64,
) -> Result<bool> {
    let g2 = gamma * gamma;
    let join = eval(f, &x.join(y)?)?;
    let meet = eval(f, &x.meet(y)?)?;
    let rhs = (g2 * join + meet) / (1.0 + g2) - slack * gamma / (1.0 + g2) - 1e-7;
    Ok(eval(f, x)? >= rhs)
}
