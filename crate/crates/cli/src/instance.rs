//! Instance files: JSON with an explicit schema version.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "dimension": 1,
//!   "objective": { "type": "quadratic", "hessian": [[-2.0]], "linear": [2.0], "offset": 0.0 },
//!   "body": { "type": "box", "upper": [1.0] },
//!   "parameters": { "epsilon": 0.3, "delta": 0.25, "t_s": 0.5 },
//!   "seed": 7
//! }
//! ```
//!
//! `gamma`, `smoothness` and `budget` are optional. Floats are written in the
//! shortest form that parses back to the same value.

use std::path::Path;

use serde::{Deserialize, Serialize};
use weakdr::driver::RunBudget;
use weakdr::fwg::FwgConfig;
use weakdr::objective::estimate_gamma;
use weakdr::verify::{exact_gamma_quadratic, CertifiedInstance};
use weakdr::{Body, BodyKind, ConstantObjective, Objective, Point, QuadraticObjective, SeparableExponential};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;
/// Samples used when `gamma` has to be estimated.
pub const GAMMA_SAMPLES: usize = 5000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ObjectiveSpec {
    Quadratic(QuadraticSpec),
    SeparableExponential(SeparableSpec),
    Constant(ConstantSpec),
    Builtin(BuiltinSpec),
}

/// `½xᵀHx + hᵀx + c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticSpec {
    pub hessian: Vec<Vec<f64>>,
    pub linear: Vec<f64>,
    #[serde(default)]
    pub offset: f64,
}

/// `c + Σ bᵢ(e^{aᵢxᵢ} − 1)/aᵢ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparableSpec {
    pub rates: Vec<f64>,
    pub weights: Vec<f64>,
    #[serde(default)]
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantSpec {
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuiltinSpec {
    pub name: Builtin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Builtin {
    /// `Σ 2xᵢ − xᵢ²`, increasing on the cube.
    Parabola,
    /// `Σ xᵢ(1 − xᵢ)`, peaked at `½`.
    Tent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum BodySpec {
    Box(BoxSpec),
    Knapsack(KnapsackSpec),
    Polytope(PolytopeSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnapsackSpec {
    pub weights: Vec<f64>,
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolytopeSpec {
    pub matrix: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    pub epsilon: f64,
    pub delta: f64,
    pub t_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_calls: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_levels: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub schema_version: u32,
    pub dimension: usize,
    pub objective: ObjectiveSpec,
    pub body: BodySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothness: Option<f64>,
    pub parameters: Parameters,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<BudgetSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Declared,
    /// Computed exactly from the objective's closed form.
    Exact,
    Estimated,
}

/// A parsed objective with its smoothness constant.
pub struct LoadedObjective {
    inner: Box<dyn Objective>,
    smoothness: f64,
}

impl Objective for LoadedObjective {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &Point) -> f64 {
        self.inner.value(x)
    }

    fn gradient(&self, x: &Point) -> Vec<f64> {
        self.inner.gradient(x)
    }

    fn smoothness(&self) -> f64 {
        self.smoothness
    }
}

pub struct LoadedInstance {
    pub objective: LoadedObjective,
    pub body: Body,
    pub gamma: f64,
    pub gamma_source: Source,
    pub smoothness_source: Source,
    pub config: FwgConfig,
    pub budget: RunBudget,
    pub seed: u64,
}

fn field_error(field: &str) -> impl FnOnce(weakdr::Error) -> CliError + '_ {
    move |e| CliError::parse(field, e.to_string())
}

impl InstanceFile {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let mut de = serde_json::Deserializer::from_str(text);
        let parsed: Result<InstanceFile, _> = serde_path_to_error::deserialize(&mut de);
        let file = match parsed {
            Ok(file) => file,
            Err(e) => {
                let path = e.path().to_string();
                let inner = e.into_inner();
                // Tagged sections lose the path below the tag; look inside them again.
                if !inner.is_syntax() && !inner.is_eof() && (path == "objective" || path == "body") {
                    if let Some(err) = locate_in_section(text, &path) {
                        return Err(err);
                    }
                }
                let field = if path == "." { "instance".to_string() } else { path };
                return Err(CliError::parse(field, inner.to_string()));
            }
        };
        de.end().map_err(|e| CliError::parse("instance", e.to_string()))?;
        Ok(file)
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance files always serialize") + "\n"
    }

    fn objective(&self) -> Result<(Box<dyn Objective>, Option<f64>), CliError> {
        let n = self.dimension;
        let expect_dim = |len: usize, field: &str| {
            if len == n {
                Ok(())
            } else {
                Err(CliError::parse(field, format!("expected length {n}, found {len}")))
            }
        };
        Ok(match &self.objective {
            ObjectiveSpec::Quadratic(QuadraticSpec { hessian, linear, offset }) => {
                expect_dim(linear.len(), "objective.linear")?;
                expect_dim(hessian.len(), "objective.hessian")?;
                let q = QuadraticObjective::new(hessian.clone(), linear.clone(), *offset).map_err(field_error("objective"))?;
                let gamma = exact_gamma_quadratic(&q);
                (Box::new(q), gamma)
            }
            ObjectiveSpec::SeparableExponential(SeparableSpec { rates, weights, offset }) => {
                expect_dim(rates.len(), "objective.rates")?;
                expect_dim(weights.len(), "objective.weights")?;
                let s = SeparableExponential::new(rates.clone(), weights.clone(), *offset).map_err(field_error("objective"))?;
                let gamma = s.exact_gamma();
                (Box::new(s), Some(gamma))
            }
            ObjectiveSpec::Constant(ConstantSpec { value }) => {
                if !(*value >= 0.0 && value.is_finite()) {
                    return Err(CliError::parse("objective.value", "must be finite and nonnegative"));
                }
                (Box::new(ConstantObjective { dim: n, value: *value }), Some(1.0))
            }
            ObjectiveSpec::Builtin(BuiltinSpec { name }) => {
                let linear = match name {
                    Builtin::Parabola => 2.0,
                    Builtin::Tent => 1.0,
                };
                let hessian = (0..n).map(|i| (0..n).map(|j| if i == j { -2.0 } else { 0.0 }).collect()).collect();
                let q = QuadraticObjective::new(hessian, vec![linear; n], 0.0).map_err(field_error("objective"))?;
                (Box::new(q), Some(1.0))
            }
        })
    }

    fn body_kind(&self) -> Result<BodyKind, CliError> {
        let n = self.dimension;
        Ok(match &self.body {
            BodySpec::Box(BoxSpec { upper }) => {
                if upper.len() != n {
                    return Err(CliError::parse("body.upper", format!("expected length {n}, found {}", upper.len())));
                }
                BodyKind::Box {
                    upper: Point::new(upper.clone()).map_err(field_error("body.upper"))?,
                }
            }
            BodySpec::Knapsack(KnapsackSpec { weights, capacity }) => {
                if weights.len() != n {
                    return Err(CliError::parse("body.weights", format!("expected length {n}, found {}", weights.len())));
                }
                BodyKind::Knapsack {
                    weights: weights.clone(),
                    capacity: *capacity,
                }
            }
            BodySpec::Polytope(PolytopeSpec { matrix, rhs }) => {
                if let Some(k) = matrix.iter().position(|row| row.len() != n) {
                    return Err(CliError::parse(format!("body.matrix[{k}]"), format!("expected length {n}")));
                }
                BodyKind::Polytope {
                    matrix: matrix.clone(),
                    rhs: rhs.clone(),
                }
            }
        })
    }

    pub fn load(&self) -> Result<LoadedInstance, CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::parse(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        if self.dimension == 0 {
            return Err(CliError::parse("dimension", "must be at least 1"));
        }
        let (inner, exact_gamma) = self.objective()?;
        let body = Body::new(self.body_kind()?).map_err(field_error("body"))?;

        let (smoothness, smoothness_source) = match self.smoothness {
            Some(l) if l >= 0.0 && l.is_finite() => (l, Source::Declared),
            Some(_) => return Err(CliError::parse("smoothness", "must be finite and nonnegative")),
            None => (inner.smoothness(), Source::Exact),
        };
        let (gamma, gamma_source) = match (self.gamma, exact_gamma) {
            (Some(g), _) if g > 0.0 && g <= 1.0 => (g, Source::Declared),
            (Some(_), _) => return Err(CliError::parse("gamma", "must lie in (0,1]")),
            (None, Some(g)) => (g, Source::Exact),
            (None, None) => (estimate_gamma(inner.as_ref(), GAMMA_SAMPLES, self.seed)?.gamma, Source::Estimated),
        };
        let p = self.parameters;
        let config = FwgConfig::new(p.t_s, p.epsilon, p.delta, gamma).map_err(field_error("parameters"))?;
        let mut budget = RunBudget::for_config(&config);
        if let Some(b) = self.budget {
            if b.max_calls == Some(0) || b.max_levels == Some(0) {
                return Err(CliError::parse("budget", "limits must be at least 1"));
            }
            budget.max_calls = b.max_calls.unwrap_or(budget.max_calls);
            budget.max_levels = b.max_levels.unwrap_or(budget.max_levels);
        }
        Ok(LoadedInstance {
            objective: LoadedObjective { inner, smoothness },
            body,
            gamma,
            gamma_source,
            smoothness_source,
            config,
            budget,
            seed: self.seed,
        })
    }

    /// An instance file reproducing a generated test instance.
    pub fn from_certified(inst: &CertifiedInstance, seed: u64) -> Self {
        let q = &inst.objective;
        let body = match &inst.body {
            BodyKind::Box { upper } => BodySpec::Box(BoxSpec {
                upper: upper.coords().to_vec(),
            }),
            BodyKind::Knapsack { weights, capacity } => BodySpec::Knapsack(KnapsackSpec {
                weights: weights.clone(),
                capacity: *capacity,
            }),
            BodyKind::Polytope { matrix, rhs } => BodySpec::Polytope(PolytopeSpec {
                matrix: matrix.clone(),
                rhs: rhs.clone(),
            }),
        };
        InstanceFile {
            schema_version: SCHEMA_VERSION,
            dimension: q.linear().len(),
            objective: ObjectiveSpec::Quadratic(QuadraticSpec {
                hessian: q.hessian().to_vec(),
                linear: q.linear().to_vec(),
                offset: q.offset(),
            }),
            body,
            gamma: Some(inst.gamma),
            smoothness: None,
            parameters: Parameters {
                epsilon: 0.3,
                delta: 0.25,
                t_s: 0.5,
            },
            seed,
            budget: None,
        }
    }
}

fn section_error<T: serde::de::DeserializeOwned>(
    section: &str,
    value: serde_json::Value,
) -> Option<CliError> {
    serde_path_to_error::deserialize::<_, T>(value).err().map(|e| {
        let field = format!("{section}.{}", e.path());
        CliError::parse(field, e.into_inner().to_string())
    })
}

/// Re-reads the `objective` or `body` section with its variant type resolved,
/// so the error names the field inside the section.
fn locate_in_section(text: &str, section: &str) -> Option<CliError> {
    let root: serde_json::Value = serde_json::from_str(text).ok()?;
    let mut value = root.get(section)?.clone();
    let kind = value.as_object_mut()?.remove("type")?;
    let kind = kind.as_str()?.to_string();
    match (section, kind.as_str()) {
        ("objective", "quadratic") => section_error::<QuadraticSpec>(section, value),
        ("objective", "separable-exponential") => section_error::<SeparableSpec>(section, value),
        ("objective", "constant") => section_error::<ConstantSpec>(section, value),
        ("objective", "builtin") => section_error::<BuiltinSpec>(section, value),
        ("body", "box") => section_error::<BoxSpec>(section, value),
        ("body", "knapsack") => section_error::<KnapsackSpec>(section, value),
        ("body", "polytope") => section_error::<PolytopeSpec>(section, value),
        _ => None,
    }
}

/// FNV-1a over the compact JSON form, as 16 hex digits.
pub fn instance_hash(file: &InstanceFile) -> String {
    let text = serde_json::to_string(file).expect("instance files always serialize");
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in text.bytes() {
        h ^= byte as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("{h:016x}")
}
