//! Down-closed convex bodies in `[0, 1]^n` with a linear optimization oracle.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Point;
use crate::sampling::uniform_point;
use crate::simplex;

/// Knapsack bodies up to this dimension get an exact, enumerated diameter.
pub const EXACT_DIAMETER_MAX_DIM: usize = 12;

/// The half-space `{x : ⟨normal, x⟩ ≥ threshold}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub threshold: f64,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, threshold: f64) -> Self {
        Halfspace { normal, threshold }
    }

    pub fn contains(&self, x: &Point, tol: f64) -> bool {
        x.dot(&self.normal) >= self.threshold - tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum BodyKind {
    /// `[0, upper]`.
    Box { upper: Point },
    /// `{x ∈ [0,1]^n : ⟨weights, x⟩ ≤ capacity}`.
    Knapsack { weights: Vec<f64>, capacity: f64 },
    /// `{x ∈ [0,1]^n : Ax ≤ b}` with `A, b ≥ 0`.
    Polytope { matrix: Vec<Vec<f64>>, rhs: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diameter {
    pub value: f64,
    /// False when `value` is only an upper bound.
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub point: Point,
    pub value: f64,
}

/// A down-closed convex body `P ⊆ [0, 1]^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Body {
    kind: BodyKind,
    dim: usize,
    diameter: Diameter,
}

impl Body {
    pub fn new(kind: BodyKind) -> Result<Self> {
        let dim = match &kind {
            BodyKind::Box { upper } => upper.dim(),
            BodyKind::Knapsack { weights, capacity } => {
                if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite()))
                    || !(*capacity >= 0.0 && capacity.is_finite())
                {
                    return Err(Error::Parameter(
                        "knapsack weights and capacity must be finite and nonnegative".into(),
                    ));
                }
                weights.len()
            }
            BodyKind::Polytope { matrix, rhs } => {
                if matrix.len() != rhs.len() {
                    return Err(Error::DimensionMismatch {
                        expected: matrix.len(),
                        found: rhs.len(),
                    });
                }
                let n = matrix.first().map_or(0, Vec::len);
                if matrix.iter().any(|row| row.len() != n) {
                    return Err(Error::Parameter("polytope rows differ in length".into()));
                }
                if matrix.iter().flatten().chain(rhs).any(|v| !(*v >= 0.0 && v.is_finite())) {
                    return Err(Error::Parameter(
                        "polytope matrix and right-hand side must be nonnegative".into(),
                    ));
                }
                n
            }
        };
        if dim == 0 {
            return Err(Error::Parameter("body needs dimension >= 1".into()));
        }
        let mut body = Body {
            kind,
            dim,
            diameter: Diameter {
                value: 0.0,
                exact: false,
            },
        };
        body.diameter = body.compute_diameter();
        Ok(body)
    }

    pub fn unit_box(n: usize) -> Self {
        Body::new(BodyKind::Box { upper: Point::ones(n) }).expect("unit box is valid")
    }

    pub fn boxed(upper: Point) -> Result<Self> {
        Body::new(BodyKind::Box { upper })
    }

    pub fn knapsack(weights: Vec<f64>, capacity: f64) -> Result<Self> {
        Body::new(BodyKind::Knapsack { weights, capacity })
    }

    pub fn polytope(matrix: Vec<Vec<f64>>, rhs: Vec<f64>) -> Result<Self> {
        Body::new(BodyKind::Polytope { matrix, rhs })
    }

    pub fn kind(&self) -> &BodyKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn diameter(&self) -> Diameter {
        self.diameter
    }

    /// True iff every constraint holds within `tol`.
    pub fn is_feasible(&self, x: &Point, tol: f64) -> bool {
        if x.dim() != self.dim {
            return false;
        }
        match &self.kind {
            BodyKind::Box { upper } => x.iter().zip(upper.iter()).all(|(a, u)| *a <= u + tol),
            BodyKind::Knapsack { weights, capacity } => x.dot(weights) <= capacity + tol,
            BodyKind::Polytope { matrix, rhs } => {
                matrix.iter().zip(rhs).all(|(row, b)| x.dot(row) <= b + tol)
            }
        }
    }

    /// Maximizes `⟨c, x⟩` over the body, optionally intersected with `extra`.
    ///
    /// Without `extra`, boxes and knapsacks are solved in closed form; every
    /// other case goes through the dense simplex.
    pub fn lp_maximize(&self, c: &[f64], extra: Option<&Halfspace>) -> Result<LpSolution> {
        self.check_vector(c)?;
        match (&self.kind, extra) {
            (BodyKind::Box { upper }, None) => {
                let coords = c
                    .iter()
                    .zip(upper.iter())
                    .map(|(&ci, &u)| if ci > 0.0 { u } else { 0.0 })
                    .collect();
                self.solution(coords, c)
            }
            (BodyKind::Knapsack { weights, capacity }, None) => {
                self.solution(greedy_knapsack(c, weights, *capacity), c)
            }
            _ => self.lp_maximize_simplex(c, extra),
        }
    }

    /// The general path: every body is handed to the simplex solver.
    pub fn lp_maximize_simplex(&self, c: &[f64], extra: Option<&Halfspace>) -> Result<LpSolution> {
        self.check_vector(c)?;
        let n = self.dim;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut rhs: Vec<f64> = Vec::new();
        let upper: Vec<f64> = match &self.kind {
            BodyKind::Box { upper } => upper.coords().to_vec(),
            BodyKind::Knapsack { weights, capacity } => {
                rows.push(weights.clone());
                rhs.push(*capacity);
                vec![1.0; n]
            }
            BodyKind::Polytope { matrix, rhs: b } => {
                rows.extend(matrix.iter().cloned());
                rhs.extend(b);
                vec![1.0; n]
            }
        };
        for (i, u) in upper.into_iter().enumerate() {
            let mut row = vec![0.0; n];
            row[i] = 1.0;
            rows.push(row);
            rhs.push(u);
        }
        if let Some(h) = extra {
            self.check_vector(&h.normal)?;
            rows.push(h.normal.iter().map(|w| -w).collect());
            rhs.push(-h.threshold);
        }
        let opt = simplex::maximize(c, &rows, &rhs)?;
        self.solution(opt.x, c)
    }

    /// Random feasible point: a uniform cube sample shrunk toward `0` until it fits.
    pub fn sample_point(&self, rng: &mut impl Rng) -> Point {
        let x = uniform_point(rng, self.dim);
        let scale = match &self.kind {
            BodyKind::Box { upper } => return x.hadamard(upper).expect("same dimension"),
            BodyKind::Knapsack { weights, capacity } => fit_scale(x.dot(weights), *capacity),
            BodyKind::Polytope { matrix, rhs } => matrix
                .iter()
                .zip(rhs)
                .map(|(row, b)| fit_scale(x.dot(row), *b))
                .fold(1.0, f64::min),
        };
        x.scale(scale).expect("scale lies in [0,1]")
    }

    /// Coordinatewise upper bounds of the body.
    pub fn bounding_box(&self) -> Point {
        let coords = match &self.kind {
            BodyKind::Box { upper } => return upper.clone(),
            BodyKind::Knapsack { weights, capacity } => weights
                .iter()
                .map(|&w| if w > 0.0 { (capacity / w).min(1.0) } else { 1.0 })
                .collect(),
            BodyKind::Polytope { matrix, rhs } => (0..self.dim)
                .map(|i| {
                    matrix
                        .iter()
                        .zip(rhs)
                        .filter(|(row, _)| row[i] > 0.0)
                        .map(|(row, b)| b / row[i])
                        .fold(1.0, f64::min)
                })
                .collect(),
        };
        Point::new(coords).expect("bounds lie in [0,1]")
    }

    fn compute_diameter(&self) -> Diameter {
        match &self.kind {
            BodyKind::Box { upper } => Diameter {
                value: upper.iter().map(|u| u * u).sum::<f64>().sqrt(),
                exact: true,
            },
            BodyKind::Knapsack { weights, capacity } if self.dim <= EXACT_DIAMETER_MAX_DIM => Diameter {
                value: knapsack_vertex_diameter(weights, *capacity),
                exact: true,
            },
            _ => Diameter {
                value: self.bounding_box().iter().map(|u| u * u).sum::<f64>().sqrt(),
                exact: false,
            },
        }
    }

    fn check_vector(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        Ok(())
    }

    fn solution(&self, coords: Vec<f64>, c: &[f64]) -> Result<LpSolution> {
        let point = Point::new(coords)?;
        let value = point.dot(c);
        Ok(LpSolution { point, value })
    }
}

fn fit_scale(load: f64, cap: f64) -> f64 {
    if load > cap {
        cap / load
    } else {
        1.0
    }
}

/// Fractional knapsack: fill coordinates by decreasing `c_i / a_i`, lowest index first on ties.
fn greedy_knapsack(c: &[f64], weights: &[f64], capacity: f64) -> Vec<f64> {
    let n = c.len();
    let mut x = vec![0.0; n];
    let mut order: Vec<usize> = Vec::new();
    for i in 0..n {
        if c[i] > 0.0 {
            if weights[i] == 0.0 {
                x[i] = 1.0;
            } else {
                order.push(i);
            }
        }
    }
    order.sort_by(|&i, &j| {
        (c[j] / weights[j])
            .partial_cmp(&(c[i] / weights[i]))
            .expect("finite ratios")
            .then(i.cmp(&j))
    });
    let mut room = capacity;
    for i in order {
        if room <= 0.0 {
            break;
        }
        let take = (room / weights[i]).min(1.0);
        x[i] = take;
        room -= take * weights[i];
    }
    x
}

/// Exact diameter of `{x ∈ [0,1]^n : ⟨a,x⟩ ≤ b}` from its vertex set: every
/// vertex has all but at most one coordinate in `{0, 1}`.
fn knapsack_vertex_diameter(weights: &[f64], capacity: f64) -> f64 {
    let n = weights.len();
    let tol = 1e-12 * (1.0 + capacity);
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    for mask in 0u32..1 << n {
        let corner: Vec<f64> = (0..n).map(|i| f64::from((mask >> i) & 1)).collect();
        let load: f64 = corner.iter().zip(weights).map(|(x, w)| x * w).sum();
        if load <= capacity + tol {
            vertices.push(corner.clone());
        }
        // One fractional coordinate on the knapsack face.
        for j in 0..n {
            if corner[j] != 0.0 || weights[j] <= 0.0 {
                continue;
            }
            let frac = (capacity - load) / weights[j];
            if frac > tol && frac < 1.0 - tol {
                let mut v = corner.clone();
                v[j] = frac;
                vertices.push(v);
            }
        }
    }
    let mut best = 0.0f64;
    for (k, u) in vertices.iter().enumerate() {
        for v in &vertices[k + 1..] {
            let d: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
            best = best.max(d);
        }
    }
    best.sqrt()
}
