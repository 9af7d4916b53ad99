//! The approximation curve `Φ_γ`.
//!
//! The greedy certificate reads `A·F(o) + B·F(z⊙o) + C·F(z⊕o)` with
//! coefficients depending on `(γ, t_s)`, the double greedy certificate
//! `D·F(z⊙o) + E·F(z⊕o)` (up to the `F(o)` part) with coefficients depending on
//! `(γ, r)`. Mixing them with weight `α` cancels the unknown terms when
//! `(1−α)B + αD ≥ 0` and `(1−α)C + αE ≥ 0`, leaving `(1−α)A` as the factor.
//! `Φ_γ` is the largest such factor over a grid of `(r, t_s)`.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this distance from `γ = 1` the coefficients are extrapolated.
pub const LIMIT_BAND: f64 = 1e-3;
const LIMIT_NODES: usize = 6;
const LIMIT_FIRST_NODE: f64 = 1e-2;
/// Largest allowed disagreement between the 5- and 6-node extrapolations.
pub const LIMIT_CONVERGENCE: f64 = 1e-7;

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma <= 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("gamma must lie in (0,1], got {gamma}")))
    }
}

fn raw_a(g: f64, t: f64) -> f64 {
    -(g * t - g).exp() / (1.0 - g) + (-g * g).exp() / (g * (1.0 - g)) * ((g * g * t).exp() - (1.0 - g))
}

fn raw_c(g: f64, t: f64) -> f64 {
    let g2 = g * g;
    let h = 1.0 - g;
    let first = ((g2 * t).exp() - 1.0) / (g * h) * ((-g * (1.0 - t) - g2 * t).exp() - (-g2).exp());
    let middle = (-g * (1.0 - t)).exp() / g * (((-g * t).exp() - 1.0) + ((-g2 * t).exp() - (-g * t).exp()) / h);
    let growth = (g * h * (1.0 - t)).exp();
    let last = (-g * (1.0 - t) - g2 * t).exp() * (g2 / h * (1.0 - t) * growth + g / (h * h) * (1.0 - growth));
    first + middle + last
}

/// Evaluates `raw` at `γ = 1 − h` for `h` close to 0 by polynomial
/// extrapolation (Neville) from `h_k = 10⁻²·2^{−k}`, where the formula is
/// still well conditioned.
fn near_one(raw: fn(f64, f64) -> f64, h: f64, t: f64) -> f64 {
    let nodes: Vec<f64> = (0..LIMIT_NODES).map(|k| LIMIT_FIRST_NODE * 0.5f64.powi(k as i32)).collect();
    let values: Vec<f64> = nodes.iter().map(|&hk| raw(1.0 - hk, t)).collect();
    let full = neville(&nodes, &values, h);
    let fewer = neville(&nodes[..LIMIT_NODES - 1], &values[..LIMIT_NODES - 1], h);
    assert!(
        (full - fewer).abs() < LIMIT_CONVERGENCE,
        "pole cancellation failed at t = {t}: {full} vs {fewer}"
    );
    full
}

fn neville(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut p = ys.to_vec();
    for level in 1..xs.len() {
        for i in 0..xs.len() - level {
            p[i] = ((x - xs[i + level]) * p[i] + (xs[i] - x) * p[i + 1]) / (xs[i] - xs[i + level]);
        }
    }
    p[0]
}

fn with_limit(raw: fn(f64, f64) -> f64, gamma: f64, t: f64) -> f64 {
    let h = 1.0 - gamma;
    if h < LIMIT_BAND {
        near_one(raw, h, t)
    } else {
        raw(gamma, t)
    }
}

/// `A_γ(t) = −e^{γt−γ}/(1−γ) + e^{−γ²}(e^{γ²t} − (1−γ))/(γ(1−γ))`, with the
/// `O(ε)` term dropped.
pub fn coeff_a(gamma: f64, t_s: f64) -> f64 {
    with_limit(raw_a, gamma, t_s)
}

/// `B_γ(t) = (e^{−γ} − e^{γt−γ})/γ`.
pub fn coeff_b(gamma: f64, t_s: f64) -> f64 {
    ((-gamma).exp() - (gamma * t_s - gamma).exp()) / gamma
}

pub fn coeff_c(gamma: f64, t_s: f64) -> f64 {
    with_limit(raw_c, gamma, t_s)
}

/// `(2γ^{3/2}r + γ/(1+γ²)·r²) / (r² + 2γ^{3/2}r + 1)`.
pub fn coeff_d(gamma: f64, r: f64) -> f64 {
    let g15 = gamma.powf(1.5);
    (2.0 * g15 * r + gamma / (1.0 + gamma * gamma) * r * r) / (r * r + 2.0 * g15 * r + 1.0)
}

/// `γ²/(1+γ²) · r² / (r² + 2γ^{3/2}r + 1)`.
pub fn coeff_e(gamma: f64, r: f64) -> f64 {
    let g2 = gamma * gamma;
    g2 / (1.0 + g2) * r * r / (r * r + 2.0 * gamma.powf(1.5) * r + 1.0)
}

/// `γe^{−γ}`.
pub fn baseline_kappa(gamma: f64) -> f64 {
    gamma * (-gamma).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
}

impl CoefficientSet {
    pub fn at(gamma: f64, r: f64, t_s: f64) -> Self {
        CoefficientSet {
            a: coeff_a(gamma, t_s),
            b: coeff_b(gamma, t_s),
            c: coeff_c(gamma, t_s),
            d: coeff_d(gamma, r),
            e: coeff_e(gamma, r),
        }
    }

    /// The `α ∈ [0, 1]` with `(1−α)B + αD ≥ 0` and `(1−α)C + αE ≥ 0`, if any.
    pub fn alpha_interval(&self) -> Option<(f64, f64)> {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for (p, q) in [(self.b, self.d), (self.c, self.e)] {
            // p + α(q − p) ≥ 0
            let slope = q - p;
            if slope > 0.0 {
                lo = lo.max(-p / slope);
            } else if slope < 0.0 {
                hi = hi.min(-p / slope);
            } else if p < 0.0 {
                return None;
            }
        }
        (lo <= hi).then_some((lo, hi))
    }

    /// The feasible `α` maximizing `(1−α)A`.
    pub fn best_alpha(&self) -> Option<f64> {
        self.alpha_interval().map(|(lo, hi)| if self.a > 0.0 { lo } else { hi })
    }

    pub fn feasible(&self, alpha: f64, tol: f64) -> bool {
        (1.0 - alpha) * self.b + alpha * self.d >= -tol && (1.0 - alpha) * self.c + alpha * self.e >= -tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiResult {
    pub gamma: f64,
    pub phi: f64,
    pub alpha: f64,
    pub r: f64,
    pub t_s: f64,
    pub baseline: f64,
    pub feasible: bool,
}

/// Grid over `r ∈ [0, r_max]` and `t_s ∈ [0, 1]`, both endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiGrid {
    pub r_max: f64,
    pub grid_r: usize,
    pub grid_t: usize,
    /// Worker shards for the coarse pass; the result does not depend on it.
    pub shards: usize,
}

impl Default for PhiGrid {
    fn default() -> Self {
        PhiGrid {
            r_max: 10.0,
            grid_r: 1001,
            grid_t: 1001,
            shards: 1,
        }
    }
}

/// Candidate `(phi, alpha)` for a `(r, t)` pair.
fn score(gamma: f64, abc: (f64, f64, f64), r: f64) -> Option<(f64, f64)> {
    let set = CoefficientSet {
        a: abc.0,
        b: abc.1,
        c: abc.2,
        d: coeff_d(gamma, r),
        e: coeff_e(gamma, r),
    };
    set.best_alpha().map(|alpha| ((1.0 - alpha) * set.a, alpha))
}

#[derive(Debug, Clone, Copy)]
struct Incumbent {
    phi: f64,
    alpha: f64,
    r: f64,
    t: f64,
    /// Position in the scan, used to break ties deterministically.
    rank: usize,
}

fn better(a: Option<Incumbent>, b: Option<Incumbent>) -> Option<Incumbent> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => {
            if y.phi > x.phi || (y.phi == x.phi && y.rank < x.rank) {
                Some(y)
            } else {
                Some(x)
            }
        }
    }
}

fn scan(gamma: f64, rs: &[f64], ts: &[f64], shards: usize) -> Option<Incumbent> {
    let shard_len = ts.len().div_ceil(shards.max(1)).max(1);
    let chunks: Vec<(usize, &[f64])> = ts.chunks(shard_len).enumerate().map(|(k, c)| (k * shard_len, c)).collect();
    chunks
        .into_par_iter()
        .map(|(offset, chunk)| {
            let mut best = None;
            for (dt, &t) in chunk.iter().enumerate() {
                let abc = (coeff_a(gamma, t), coeff_b(gamma, t), coeff_c(gamma, t));
                for (ir, &r) in rs.iter().enumerate() {
                    if let Some((phi, alpha)) = score(gamma, abc, r) {
                        let rank = (offset + dt) * rs.len() + ir;
                        best = better(best, Some(Incumbent { phi, alpha, r, t, rank }));
                    }
                }
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(None, better)
}

fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    (0..points).map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64).collect()
}

/// Coarse pass over the grid only.
pub fn optimize_phi_coarse(gamma: f64, grid: &PhiGrid) -> Result<PhiResult> {
    optimize(gamma, grid, false)
}

/// Grid search followed by one refinement pass with ten times finer steps
/// around the incumbent.
pub fn optimize_phi(gamma: f64, grid: &PhiGrid) -> Result<PhiResult> {
    optimize(gamma, grid, true)
}

fn optimize(gamma: f64, grid: &PhiGrid, refine: bool) -> Result<PhiResult> {
    check_gamma(gamma)?;
    if grid.grid_r < 100 || grid.grid_t < 100 || !(grid.r_max > 0.0) {
        return Err(Error::Parameter("grids need at least 100 points and r_max > 0".into()));
    }
    let rs = linspace(0.0, grid.r_max, grid.grid_r);
    let ts = linspace(0.0, 1.0, grid.grid_t);
    let mut best = scan(gamma, &rs, &ts, grid.shards);
    if refine {
        if let Some(inc) = best {
            let dr = grid.r_max / (grid.grid_r - 1) as f64;
            let dt = 1.0 / (grid.grid_t - 1) as f64;
            let fine_r = linspace((inc.r - dr).max(0.0), (inc.r + dr).min(grid.r_max), 21);
            let fine_t = linspace((inc.t - dt).max(0.0), (inc.t + dt).min(1.0), 21);
            let fine = scan(gamma, &fine_r, &fine_t, 1).map(|f| Incumbent {
                rank: usize::MAX,
                ..f
            });
            // Only a strict improvement replaces the coarse incumbent.
            if fine.is_some_and(|f| f.phi > inc.phi) {
                best = fine;
            }
        }
    }
    let baseline = baseline_kappa(gamma);
    Ok(match best {
        Some(b) => PhiResult {
            gamma,
            phi: b.phi,
            alpha: b.alpha,
            r: b.r,
            t_s: b.t,
            baseline,
            feasible: true,
        },
        None => PhiResult {
            gamma,
            phi: 0.0,
            alpha: 0.0,
            r: 0.0,
            t_s: 0.0,
            baseline,
            feasible: false,
        },
    })
}

pub const CSV_HEADER: &str = "gamma,phi,kappa,alpha,r,t_s";

pub fn csv_row(p: &PhiResult) -> String {
    format!(
        "{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
        p.gamma, p.phi, p.baseline, p.alpha, p.r, p.t_s
    )
}

/// Writes the header and one row per `γ`, LF-terminated.
pub fn emit_curve<W: Write>(gammas: &[f64], grid: &PhiGrid, out: &mut W) -> io::Result<Vec<PhiResult>> {
    writeln!(out, "{CSV_HEADER}")?;
    let mut rows = Vec::with_capacity(gammas.len());
    for &g in gammas {
        let p = optimize_phi(g, grid).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e.to_string()))?;
        writeln!(out, "{}", csv_row(&p))?;
        rows.push(p);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // High-precision reference values (50 significant digits, rounded).
    const A_AT_ONE: [(f64, f64); 5] = [
        (0.0, 0.367879441171442),
        (0.25, 0.458762026125333),
        (0.368, 0.499573735654625),
        (0.5, 0.541916548397508),
        (1.0, 0.632120558828558),
    ];
    const C_AT_ONE: [(f64, f64); 5] = [
        (0.0, 0.183939720585721),
        (0.25, 0.0125835078755771),
        (0.368, -0.0582243555279519),
        (0.5, -0.128052177079635),
        (1.0, -0.264241117657115),
    ];

    #[test]
    fn limits_at_one() {
        for (t, a) in A_AT_ONE {
            assert!((coeff_a(1.0, t) - a).abs() < 1e-8, "A(1,{t})");
        }
        for (t, c) in C_AT_ONE {
            assert!((coeff_c(1.0, t) - c).abs() < 1e-8, "C(1,{t})");
        }
    }

    #[test]
    fn limit_consistent_with_nearby_gamma() {
        for t in [0.0, 0.3, 0.7, 1.0] {
            assert!((coeff_a(1.0, t) - raw_a(1.0 - 1e-5, t)).abs() < 1e-3);
            assert!((coeff_c(1.0, t) - raw_c(1.0 - 1e-5, t)).abs() < 1e-3);
        }
    }

    #[test]
    fn extrapolation_joins_direct_formula() {
        for t in [0.0, 0.5, 1.0] {
            let inside = coeff_c(1.0 - 0.999 * LIMIT_BAND, t);
            let outside = coeff_c(1.0 - 1.001 * LIMIT_BAND, t);
            assert!((inside - outside).abs() < 1e-5);
        }
    }

    #[test]
    fn a_examples() {
        assert!((coeff_a(0.5, 0.0) - 0.344540246717543).abs() < 1e-12);
        assert!((coeff_a(0.5, 0.5) - 0.414784478052762).abs() < 1e-12);
        // Toward γ = 0 at t = 1: A = γ − γ³/2 + O(γ⁵).
        for g in [1e-3, 1e-4] {
            assert!((coeff_a(g, 1.0) - (g - g * g * g / 2.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn b_examples() {
        assert_eq!(coeff_b(0.7, 0.0), 0.0);
        assert!((coeff_b(1.0, 1.0) - ((-1.0f64).exp() - 1.0)).abs() < 1e-15);
        assert!((coeff_b(0.5, 0.5) + 0.344540246717543).abs() < 1e-12);
    }

    #[test]
    fn c_examples() {
        assert!((coeff_c(0.5, 0.5) + 0.0585670441282334).abs() < 1e-12);
        for g in [0.2f64, 0.5, 0.8] {
            // t = 1: only the middle bracket survives.
            let middle = ((-g).exp() - 1.0 + ((-g * g).exp() - (-g).exp()) / (1.0 - g)) / g;
            assert!((coeff_c(g, 1.0) - middle).abs() < 1e-12);
            // t = 0: only the last bracket survives.
            let s = (g * (1.0 - g)).exp();
            let last = (-g).exp() * (g * g * s / (1.0 - g) + g * (1.0 - s) / ((1.0 - g) * (1.0 - g)));
            assert!((coeff_c(g, 0.0) - last).abs() < 1e-12);
        }
        assert!((coeff_c(0.5, 0.0) - 0.0448601448181595).abs() < 1e-12);
    }

    #[test]
    fn d_e_examples() {
        assert_eq!((coeff_d(0.6, 0.0), coeff_e(0.6, 0.0)), (0.0, 0.0));
        assert!((coeff_d(1.0, 1.0) - 0.625).abs() < 1e-15);
        assert!((coeff_e(1.0, 1.0) - 0.125).abs() < 1e-15);
        let g = 0.7f64;
        assert!((coeff_d(g, 1e6) - g / (1.0 + g * g)).abs() < 1e-5);
        assert!((coeff_e(g, 1e6) - g * g / (1.0 + g * g)).abs() < 1e-5);
    }

    #[test]
    fn kappa_examples() {
        assert!((baseline_kappa(1.0) - 0.36788).abs() < 1e-5);
        assert!((baseline_kappa(0.5) - 0.30327).abs() < 1e-5);
        assert!(baseline_kappa(1e-9) < 1e-8);
    }

    #[test]
    fn reproduces_reported_rows() {
        let grid = PhiGrid::default();
        let p = optimize_phi(1.0, &grid).unwrap();
        assert!((p.phi - 0.401).abs() <= 0.002);
        assert!((p.alpha - 0.197).abs() < 0.01 && (p.t_s - 0.368).abs() < 0.01);
        let p = optimize_phi(0.5, &grid).unwrap();
        assert!((p.phi - 0.345).abs() <= 0.002);
        assert!(p.alpha < 1e-3 && p.t_s < 1e-3);
        let p = optimize_phi(0.1, &grid).unwrap();
        assert!((p.phi - 0.095).abs() <= 0.002);
    }

    #[test]
    fn returned_parameters_are_feasible() {
        for g in [0.1, 0.35, 0.8, 1.0] {
            let p = optimize_phi(g, &PhiGrid::default()).unwrap();
            assert!(p.feasible);
            assert!(CoefficientSet::at(g, p.r, p.t_s).feasible(p.alpha, 1e-12));
            assert!((p.phi - (1.0 - p.alpha) * coeff_a(g, p.t_s)).abs() < 1e-15);
        }
    }

    #[test]
    fn beats_baseline_everywhere_inside() {
        let grid = PhiGrid {
            grid_r: 201,
            grid_t: 201,
            ..Default::default()
        };
        for k in 1..100 {
            let g = k as f64 / 100.0;
            assert!(optimize_phi(g, &grid).unwrap().phi > baseline_kappa(g), "gamma {g}");
        }
    }

    #[test]
    fn refinement_never_hurts() {
        let grid = PhiGrid {
            grid_r: 150,
            grid_t: 150,
            ..Default::default()
        };
        for g in [0.2, 0.75, 0.95, 1.0] {
            assert!(optimize_phi(g, &grid).unwrap().phi >= optimize_phi_coarse(g, &grid).unwrap().phi);
        }
    }

    #[test]
    fn sharding_does_not_change_result() {
        for g in [0.3, 1.0] {
            let one = optimize_phi(g, &PhiGrid::default()).unwrap();
            for shards in [2, 3, 8] {
                let many = optimize_phi(g, &PhiGrid { shards, ..Default::default() }).unwrap();
                assert_eq!(one.phi.to_bits(), many.phi.to_bits());
                assert_eq!(one, many);
            }
        }
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        emit_curve(&[], &PhiGrid::default(), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "gamma,phi,kappa,alpha,r,t_s\n");
        let mut buf = Vec::new();
        let rows = emit_curve(&[1.0], &PhiGrid::default(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().starts_with("1.000000,0.40"));
        assert_eq!(rows.len(), 1);
        assert!(!text.contains('\r'));
    }

    #[test]
    fn rejects_gamma_outside_range() {
        assert!(optimize_phi(1.5, &PhiGrid::default()).is_err());
        assert!(optimize_phi(0.0, &PhiGrid::default()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn closed_form_alpha_matches_scan(g in 0.05f64..=1.0, r in 0.0f64..10.0, t in 0.0f64..=1.0) {
            let set = CoefficientSet::at(g, r, t);
            let step = 1.0 / 9_999.0;
            let scanned = (0..10_000)
                .map(|k| k as f64 * step)
                .filter(|&a| set.feasible(a, 0.0))
                .map(|a| (1.0 - a) * set.a)
                .fold(f64::NEG_INFINITY, f64::max);
            match set.best_alpha() {
                None => prop_assert_eq!(scanned, f64::NEG_INFINITY),
                Some(alpha) => {
                    let closed = (1.0 - alpha) * set.a;
                    prop_assert!(set.feasible(alpha, 1e-12));
                    prop_assert!(closed >= scanned - 1e-12);
                    if scanned.is_finite() {
                        prop_assert!(closed - scanned <= step * set.a.abs() + 1e-12);
                    }
                }
            }
        }
    }
}
