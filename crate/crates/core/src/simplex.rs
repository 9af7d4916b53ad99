//! Dense two-phase simplex for small LPs of the form
//! `max cᵀx  s.t.  Ax ≤ b, x ≥ 0` with `b` of either sign.
//!
//! Pivoting uses Bland's rule (lowest index enters, lowest basic index
//! leaves on ratio ties), so it never cycles and is deterministic.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;
const MAX_ITERATIONS: usize = 50_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LpOptimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

struct Tableau {
    /// `rows × (cols + 1)`; the last column is the right-hand side.
    a: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
    iterations: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.a[r][self.cols]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.a[row][col];
        for v in self.a[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.a[row].clone();
        for (r, line) in self.a.iter_mut().enumerate() {
            if r == row {
                continue;
            }
            let factor = line[col];
            if factor != 0.0 {
                for (v, pv) in line.iter_mut().zip(&pivot_row) {
                    *v -= factor * pv;
                }
                line[col] = 0.0;
            }
        }
        self.basis[row] = col;
        self.iterations += 1;
    }

    /// Maximizes `cost · x` over the current basis; `allowed` masks columns
    /// that may enter. Returns the objective value.
    fn optimize(&mut self, cost: &[f64], allowed: &dyn Fn(usize) -> bool) -> Result<f64> {
        loop {
            if self.iterations > MAX_ITERATIONS {
                return Err(Error::Solver {
                    iterations: self.iterations,
                    reason: "iteration limit reached".into(),
                });
            }
            let duals: Vec<f64> = self.basis.iter().map(|&b| cost[b]).collect();
            let entering = (0..self.cols).filter(|&j| allowed(j)).find(|&j| {
                let reduced = cost[j]
                    - self
                        .a
                        .iter()
                        .zip(&duals)
                        .map(|(row, d)| d * row[j])
                        .sum::<f64>();
                reduced > PIVOT_TOL * (1.0 + cost[j].abs())
            });
            let Some(col) = entering else {
                return Ok(self
                    .basis
                    .iter()
                    .enumerate()
                    .map(|(r, &b)| cost[b] * self.rhs(r))
                    .sum());
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.a.len() {
                let coef = self.a[r][col];
                if coef > PIVOT_TOL {
                    let ratio = self.rhs(r) / coef;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-14
                                || (ratio <= lratio + 1e-14 && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((row, _)) = leave else {
                return Err(Error::Solver {
                    iterations: self.iterations,
                    reason: "problem is unbounded".into(),
                });
            };
            self.pivot(row, col);
        }
    }
}

/// Solves `max cᵀx s.t. rows[k]·x ≤ rhs[k], x ≥ 0`.
///
/// Returns [`Error::Infeasible`] when no `x` satisfies the constraints.
pub fn maximize(c: &[f64], rows: &[Vec<f64>], rhs: &[f64]) -> Result<LpOptimum> {
    let n = c.len();
    let m = rows.len();
    if rhs.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: rhs.len(),
        });
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.len(),
        });
    }
    let negative: Vec<usize> = (0..m).filter(|&k| rhs[k] < 0.0).collect();
    let n_art = negative.len();
    // Columns: structural | slack or surplus per row | artificial.
    let cols = n + m + n_art;
    let mut a = vec![vec![0.0; cols + 1]; m];
    let mut basis = vec![0; m];
    let mut art = 0;
    for k in 0..m {
        let sign = if rhs[k] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            a[k][j] = sign * rows[k][j];
        }
        a[k][n + k] = sign;
        a[k][cols] = sign * rhs[k];
        if sign < 0.0 {
            a[k][n + m + art] = 1.0;
            basis[k] = n + m + art;
            art += 1;
        } else {
            basis[k] = n + k;
        }
    }
    let mut t = Tableau {
        a,
        basis,
        cols,
        iterations: 0,
    };

    if n_art > 0 {
        let mut phase1 = vec![0.0; cols];
        for v in phase1.iter_mut().skip(n + m) {
            *v = -1.0;
        }
        let infeasibility = -t.optimize(&phase1, &|_| true)?;
        let scale = 1.0 + rhs.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        if infeasibility > FEAS_TOL * scale {
            return Err(Error::Infeasible);
        }
        // Drive artificials out of the basis; rows where that is impossible are redundant.
        let mut r = 0;
        while r < t.a.len() {
            if t.basis[r] >= n + m {
                if let Some(col) = (0..n + m).find(|&j| t.a[r][j].abs() > PIVOT_TOL) {
                    t.pivot(r, col);
                } else {
                    t.a.remove(r);
                    t.basis.remove(r);
                    continue;
                }
            }
            r += 1;
        }
    }

    let mut cost = vec![0.0; cols];
    cost[..n].copy_from_slice(c);
    let value = t.optimize(&cost, &|j| j < n + m)?;
    let mut x = vec![0.0; n];
    for (r, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rhs(r).max(0.0);
        }
    }
    Ok(LpOptimum {
        x,
        value,
        iterations: t.iterations,
    })
}
