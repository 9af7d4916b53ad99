//! First-order oracles for nonnegative functions on `[0, 1]^n`, a few
//! concrete families, and empirical certification of the weak-DR parameter.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Point;
use crate::sampling::{interior_point, rng, uniform_point};

/// Gradient entries at or below this are skipped when forming ratios.
pub const GRADIENT_FLOOR: f64 = 1e-7;

/// A differentiable function `F : [0,1]^n → R≥0` with an `L`-Lipschitz gradient.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &Point) -> f64;

    fn gradient(&self, x: &Point) -> Vec<f64>;

    /// Lipschitz constant `L` of the gradient (an upper bound is fine).
    fn smoothness(&self) -> f64;
}

impl<T: Objective + ?Sized> Objective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &Point) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &Point) -> Vec<f64> {
        (**self).gradient(x)
    }
    fn smoothness(&self) -> f64 {
        (**self).smoothness()
    }
}

impl<T: Objective + ?Sized> Objective for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &Point) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &Point) -> Vec<f64> {
        (**self).gradient(x)
    }
    fn smoothness(&self) -> f64 {
        (**self).smoothness()
    }
}

/// `F(x)`, rejecting non-finite answers.
pub fn eval<F: Objective + ?Sized>(f: &F, x: &Point) -> Result<f64> {
    let v = f.value(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Oracle {
            what: "value",
            point: x.coords().to_vec(),
        })
    }
}

/// `∇F(x)`, rejecting non-finite or wrongly sized answers.
pub fn grad<F: Objective + ?Sized>(f: &F, x: &Point) -> Result<Vec<f64>> {
    let g = f.gradient(x);
    if g.len() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: g.len(),
        });
    }
    if g.iter().all(|v| v.is_finite()) {
        Ok(g)
    } else {
        Err(Error::Oracle {
            what: "gradient",
            point: x.coords().to_vec(),
        })
    }
}

/// `F(x) = ½ xᵀHx + hᵀx + c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticObjective {
    hessian: Vec<Vec<f64>>,
    linear: Vec<f64>,
    offset: f64,
}

impl QuadraticObjective {
    pub fn new(hessian: Vec<Vec<f64>>, linear: Vec<f64>, offset: f64) -> Result<Self> {
        let n = linear.len();
        if n == 0 {
            return Err(Error::Parameter("quadratic objective needs n >= 1".into()));
        }
        if hessian.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: hessian.len(),
            });
        }
        for (i, row) in hessian.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || (v - hessian[j][i]).abs() > 1e-12 * (1.0 + v.abs()) {
                    return Err(Error::Parameter(format!(
                        "hessian must be finite and symmetric (entry {i},{j})"
                    )));
                }
            }
        }
        if !offset.is_finite() || linear.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("non-finite quadratic coefficient".into()));
        }
        Ok(QuadraticObjective {
            hessian,
            linear,
            offset,
        })
    }

    /// Picks the smallest offset `c ≥ 0` making the function nonnegative on
    /// every corner of the cube (`n ≤ 20`) or on 10⁴ seeded samples otherwise.
    pub fn with_nonnegative_offset(hessian: Vec<Vec<f64>>, linear: Vec<f64>) -> Result<Self> {
        let mut q = QuadraticObjective::new(hessian, linear, 0.0)?;
        let n = q.dim();
        let lowest = if n <= 20 {
            (0u32..1 << n)
                .map(|mask| {
                    let x = Point::new((0..n).map(|i| f64::from((mask >> i) & 1)).collect())
                        .expect("corner");
                    q.value(&x)
                })
                .fold(f64::INFINITY, f64::min)
        } else {
            let mut r = rng(0x5eed);
            (0..10_000)
                .map(|_| q.value(&uniform_point(&mut r, n)))
                .fold(f64::INFINITY, f64::min)
        };
        q.offset = (-lowest).max(0.0);
        Ok(q)
    }

    pub fn hessian(&self) -> &[Vec<f64>] {
        &self.hessian
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// True when every Hessian entry is nonpositive, i.e. the function is DR-submodular.
    pub fn is_dr(&self) -> bool {
        self.hessian.iter().flatten().all(|&v| v <= 0.0)
    }
}

impl Objective for QuadraticObjective {
    fn dim(&self) -> usize {
        self.linear.len()
    }

    fn value(&self, x: &Point) -> f64 {
        let hx = self.gradient(x);
        // ½xᵀHx + hᵀx = ½xᵀ(Hx + h) + ½hᵀx
        0.5 * x.dot(&hx) + 0.5 * x.dot(&self.linear) + self.offset
    }

    fn gradient(&self, x: &Point) -> Vec<f64> {
        self.hessian
            .iter()
            .zip(&self.linear)
            .map(|(row, h)| x.dot(row) + h)
            .collect()
    }

    fn smoothness(&self) -> f64 {
        // Both the Frobenius norm and the max absolute row sum bound the
        // spectral norm of a symmetric matrix.
        let frobenius = self.hessian.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        let row_sum = self
            .hessian
            .iter()
            .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        frobenius.min(row_sum)
    }
}

/// `F(x) = c + Σ bᵢ (e^{aᵢxᵢ} − 1)/aᵢ` (the term is `bᵢxᵢ` when `aᵢ = 0`).
///
/// The gradient is `bᵢ e^{aᵢxᵢ}`, so the family is DR for `aᵢ ≤ 0` and
/// `e^{−max aᵢ}`-weakly DR otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparableExponential {
    rates: Vec<f64>,
    weights: Vec<f64>,
    offset: f64,
}

impl SeparableExponential {
    pub fn new(rates: Vec<f64>, weights: Vec<f64>, offset: f64) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::Parameter("separable objective needs n >= 1".into()));
        }
        if rates.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: rates.len(),
                found: weights.len(),
            });
        }
        if weights.iter().any(|&b| !(b >= 0.0 && b.is_finite()))
            || rates.iter().any(|a| !a.is_finite())
            || !(offset >= 0.0 && offset.is_finite())
        {
            return Err(Error::Parameter(
                "separable objective needs finite rates, nonnegative weights and offset".into(),
            ));
        }
        Ok(SeparableExponential {
            rates,
            weights,
            offset,
        })
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// The exact weak-DR parameter of the family.
    pub fn exact_gamma(&self) -> f64 {
        self.rates
            .iter()
            .zip(&self.weights)
            .filter(|(_, &b)| b > 0.0)
            .map(|(&a, _)| (-a.max(0.0)).exp())
            .fold(1.0, f64::min)
    }
}

impl Objective for SeparableExponential {
    fn dim(&self) -> usize {
        self.rates.len()
    }

    fn value(&self, x: &Point) -> f64 {
        self.offset
            + self
                .rates
                .iter()
                .zip(&self.weights)
                .zip(x.iter())
                .map(|((&a, &b), &xi)| {
                    if a == 0.0 {
                        b * xi
                    } else {
                        b * (a * xi).exp_m1() / a
                    }
                })
                .sum::<f64>()
    }

    fn gradient(&self, x: &Point) -> Vec<f64> {
        self.rates
            .iter()
            .zip(&self.weights)
            .zip(x.iter())
            .map(|((&a, &b), &xi)| b * (a * xi).exp())
            .collect()
    }

    fn smoothness(&self) -> f64 {
        self.rates
            .iter()
            .zip(&self.weights)
            .map(|(&a, &b)| (a * b).abs() * a.max(0.0).exp())
            .fold(0.0, f64::max)
    }
}

/// `F ≡ c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantObjective {
    pub dim: usize,
    pub value: f64,
}

impl Objective for ConstantObjective {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _: &Point) -> f64 {
        self.value
    }
    fn gradient(&self, _: &Point) -> Vec<f64> {
        vec![0.0; self.dim]
    }
    fn smoothness(&self) -> f64 {
        0.0
    }
}

/// `G(a) = F(ceiling ⊙ a)`, the restriction of `F` to the box `[0, ceiling]`.
pub struct Restricted<'a, F: Objective + ?Sized> {
    inner: &'a F,
    ceiling: Point,
}

impl<'a, F: Objective + ?Sized> Restricted<'a, F> {
    pub fn new(inner: &'a F, ceiling: Point) -> Result<Self> {
        ceiling.check_dim(inner.dim())?;
        Ok(Restricted { inner, ceiling })
    }

    pub fn ceiling(&self) -> &Point {
        &self.ceiling
    }

    fn map(&self, a: &Point) -> Point {
        self.ceiling.hadamard(a).expect("dimensions checked at construction")
    }
}

impl<F: Objective + ?Sized> Objective for Restricted<'_, F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, a: &Point) -> f64 {
        self.inner.value(&self.map(a))
    }
    fn gradient(&self, a: &Point) -> Vec<f64> {
        let g = self.inner.gradient(&self.map(a));
        g.iter().zip(self.ceiling.iter()).map(|(g, c)| g * c).collect()
    }
    fn smoothness(&self) -> f64 {
        let top = self.ceiling.iter().copied().fold(0.0, f64::max);
        self.inner.smoothness() * top * top
    }
}

/// `G(a) = F(a ⊕ floor)`.
pub struct Lifted<'a, F: Objective + ?Sized> {
    inner: &'a F,
    floor: Point,
}

impl<'a, F: Objective + ?Sized> Lifted<'a, F> {
    pub fn new(inner: &'a F, floor: Point) -> Result<Self> {
        floor.check_dim(inner.dim())?;
        Ok(Lifted { inner, floor })
    }

    fn map(&self, a: &Point) -> Point {
        a.prob_sum(&self.floor).expect("dimensions checked at construction")
    }
}

impl<F: Objective + ?Sized> Objective for Lifted<'_, F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, a: &Point) -> f64 {
        self.inner.value(&self.map(a))
    }
    fn gradient(&self, a: &Point) -> Vec<f64> {
        let g = self.inner.gradient(&self.map(a));
        g.iter().zip(self.floor.iter()).map(|(g, y)| g * (1.0 - y)).collect()
    }
    fn smoothness(&self) -> f64 {
        let top = self.floor.iter().map(|y| 1.0 - y).fold(0.0, f64::max);
        self.inner.smoothness() * top * top
    }
}

/// Worst comparable pair found while estimating γ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstPair {
    pub lower: Point,
    pub upper: Point,
    pub coordinate: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    pub gamma: f64,
    pub samples: usize,
    /// Ratios actually formed (pairs with a positive upper gradient).
    pub ratios_checked: usize,
    pub worst: Option<WorstPair>,
    /// Set when no positive-gradient pair was found and `gamma` fell back to 1.
    pub degenerate: bool,
}

/// Smallest γ̂ this estimator reports; nonpositive ratios clamp up to it.
pub const MIN_GAMMA_ESTIMATE: f64 = 1e-6;

/// Empirically certifies `∇F(x) ≥ γ ∇F(y)` for `x ≤ y`.
///
/// Each sample draws `y` uniformly and sets `x = u ⊙ y` with `u` uniform, then
/// takes `∂ᵢF(x) / ∂ᵢF(y)` over every coordinate whose upper gradient exceeds
/// [`GRADIENT_FLOOR`]. The estimate is the smallest ratio seen, clamped to `(0, 1]`.
pub fn estimate_gamma<F: Objective + ?Sized>(f: &F, samples: usize, seed: u64) -> Result<GammaEstimate> {
    if samples < 100 {
        return Err(Error::Parameter(format!("estimate_gamma needs >= 100 samples, got {samples}")));
    }
    let n = f.dim();
    let mut r = rng(seed);
    let mut worst: Option<WorstPair> = None;
    let mut ratios_checked = 0;
    for _ in 0..samples {
        let upper = uniform_point(&mut r, n);
        let u = uniform_point(&mut r, n);
        let lower = u.hadamard(&upper)?;
        let gu = grad(f, &upper)?;
        let gl = grad(f, &lower)?;
        for i in 0..n {
            if gu[i] <= GRADIENT_FLOOR {
                continue;
            }
            ratios_checked += 1;
            let ratio = gl[i] / gu[i];
            if worst.as_ref().is_none_or(|w| ratio < w.ratio) {
                worst = Some(WorstPair {
                    lower: lower.clone(),
                    upper: upper.clone(),
                    coordinate: i,
                    ratio,
                });
            }
        }
    }
    let (gamma, degenerate) = match &worst {
        None => (1.0, true),
        Some(w) => (w.ratio.clamp(MIN_GAMMA_ESTIMATE, 1.0), false),
    };
    Ok(GammaEstimate {
        gamma,
        samples,
        ratios_checked,
        worst,
        degenerate,
    })
}

/// Largest `|fd − oracle| / (1 + |oracle|)` over `points` seeded interior
/// points, with central differences of step `1e-6`.
pub fn gradient_check<F: Objective + ?Sized>(f: &F, points: usize, seed: u64) -> Result<f64> {
    let n = f.dim();
    let h = 1e-6;
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..points {
        let x = interior_point(&mut r, n, 0.01, 0.99);
        let g = grad(f, &x)?;
        for i in 0..n {
            let plus = x.with_coord(i, x[i] + h)?;
            let minus = x.with_coord(i, x[i] - h)?;
            let fd = (eval(f, &plus)? - eval(f, &minus)?) / (2.0 * h);
            worst = worst.max((fd - g[i]).abs() / (1.0 + g[i].abs()));
        }
    }
    Ok(worst)
}

/// Sampled lower estimate of the gradient Lipschitz constant, the largest
/// `‖∇F(x) − ∇F(y)‖ / ‖x − y‖` seen, inflated by `margin`.
pub fn estimate_smoothness<F: Objective + ?Sized>(
    f: &F,
    samples: usize,
    seed: u64,
    margin: f64,
) -> Result<f64> {
    let n = f.dim();
    let mut r = rng(seed);
    let mut best = 0.0f64;
    for _ in 0..samples {
        let x = uniform_point(&mut r, n);
        // Short steps see local curvature, long ones global variation.
        let scale = if r.gen_bool(0.5) { 1e-3 } else { 1.0 };
        let y = Point::new(
            x.iter()
                .map(|&c| (c + scale * (r.gen::<f64>() - 0.5)).clamp(0.0, 1.0))
                .collect(),
        )?;
        let dist = x.distance(&y);
        if dist < 1e-12 {
            continue;
        }
        let (gx, gy) = (grad(f, &x)?, grad(f, &y)?);
        let diff = gx.iter().zip(&gy).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        best = best.max(diff / dist);
    }
    Ok(best * (1.0 + margin))
}
