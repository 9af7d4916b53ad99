//! Approximation algorithms for maximizing nonnegative, non-monotone
//! γ-weakly DR-submodular functions over down-closed convex bodies.
//!
//! The building blocks, bottom up:
//!
//! * [`point`]: lattice algebra on `[0, 1]^n` (join, meet, `⊙`, `⊕`).
//! * [`objective`]: first-order oracles and empirical γ certification.
//! * [`polytope`]: down-closed bodies with a linear optimization oracle.
//! * [`local_search`]: a fixed-step Frank–Wolfe routine with a first-order certificate.
//! * [`double_greedy`]: grid double greedy and box maximization.
//! * [`fwg`]: the Frank–Wolfe guided measured continuous greedy.
//! * [`driver`]: the recursive driver combining all of the above.
//! * [`guarantee`]: the approximation curve `Φ_γ` and its coefficients.

pub mod double_greedy;
pub mod driver;
pub mod error;
pub mod fwg;
pub mod guarantee;
pub mod local_search;
pub mod objective;
pub mod point;
pub mod polytope;
pub mod sampling;
pub mod simplex;
pub mod verify;

pub use error::{Error, Result};
pub use objective::{ConstantObjective, Objective, QuadraticObjective, SeparableExponential};
pub use point::Point;
pub use polytope::{Body, BodyKind, Halfspace};

/// Crate version, recorded in report files.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
