//! Points of the unit cube and the lattice operations on them.

use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest excursion outside `[0, 1]` that construction silently clamps.
pub const CLAMP_TOLERANCE: f64 = 1e-9;

/// A vector in `[0, 1]^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(Vec<f64>);

impl Point {
    /// Builds a point, clamping coordinates that stray at most
    /// [`CLAMP_TOLERANCE`] outside the cube and rejecting anything further.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        let mut coords = coords;
        for (index, c) in coords.iter_mut().enumerate() {
            if !c.is_finite() || *c < -CLAMP_TOLERANCE || *c > 1.0 + CLAMP_TOLERANCE {
                return Err(Error::OutOfRange { index, value: *c });
            }
            *c = c.clamp(0.0, 1.0);
        }
        Ok(Point(coords))
    }

    pub fn zeros(n: usize) -> Self {
        Point(vec![0.0; n])
    }

    pub fn ones(n: usize) -> Self {
        Point(vec![1.0; n])
    }

    /// The standard basis vector `e_i`.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut coords = vec![0.0; n];
        coords[i] = 1.0;
        Point(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    /// Returns a copy with coordinate `i` replaced by `value`.
    pub fn with_coord(&self, i: usize, value: f64) -> Result<Self> {
        let mut coords = self.0.clone();
        coords[i] = value;
        Point::new(coords)
    }

    /// Coordinatewise maximum.
    pub fn join(&self, other: &Point) -> Result<Point> {
        self.zip_with(other, f64::max)
    }

    /// Coordinatewise minimum.
    pub fn meet(&self, other: &Point) -> Result<Point> {
        self.zip_with(other, f64::min)
    }

    /// Elementwise product.
    pub fn hadamard(&self, other: &Point) -> Result<Point> {
        self.zip_with(other, |a, b| a * b)
    }

    /// Probabilistic sum `1 - (1 - x) ⊙ (1 - y)`.
    pub fn prob_sum(&self, other: &Point) -> Result<Point> {
        self.zip_with(other, |a, b| 1.0 - (1.0 - a) * (1.0 - b))
    }

    /// `1 - x`.
    pub fn complement(&self) -> Point {
        Point(self.0.iter().map(|c| 1.0 - c).collect())
    }

    /// `s·x`, for `s ∈ [0, 1]`.
    pub fn scale(&self, s: f64) -> Result<Point> {
        Point::new(self.0.iter().map(|c| s * c).collect())
    }

    /// `x ≤ y` coordinatewise.
    pub fn le(&self, other: &Point) -> bool {
        self.dim() == other.dim() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn dot(&self, v: &[f64]) -> f64 {
        self.0.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub(crate) fn check_dim(&self, n: usize) -> Result<()> {
        if self.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.dim(),
            });
        }
        Ok(())
    }

    fn zip_with(&self, other: &Point, op: impl Fn(f64, f64) -> f64) -> Result<Point> {
        other.check_dim(self.dim())?;
        Point::new(self.0.iter().zip(&other.0).map(|(&a, &b)| op(a, b)).collect())
    }
}

impl Index<usize> for Point {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Point::new(coords)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Vec<f64> {
        p.0
    }
}

/// `⊕_j x(j)`, the probabilistic sum of a sequence (`0` when empty).
pub fn prob_sum_all<'a>(n: usize, points: impl IntoIterator<Item = &'a Point>) -> Result<Point> {
    points
        .into_iter()
        .try_fold(Point::zeros(n), |acc, p| acc.prob_sum(p))
}
