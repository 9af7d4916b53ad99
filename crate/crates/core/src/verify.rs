//! Randomized instances with exactly known γ, and the property suites that
//! check the supporting inequalities on them.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::double_greedy::{double_greedy, unbalanced_bound};
use crate::error::{Error, Result};
use crate::fwg::{closed_form_iterate, run_fwg, FwgConfig, GuessTriple};
use crate::local_search::{fw_local_max, lattice_bound_check};
use crate::objective::{estimate_gamma, eval, grad, Lifted, Objective, QuadraticObjective, Restricted};
use crate::point::Point;
use crate::polytope::{Body, BodyKind};
use crate::sampling::{rng, uniform_point};

/// Exact weak-DR parameter of `½xᵀHx + hᵀx + c` on `[0, 1]^n`, or `None` if
/// the function is not γ-weakly DR for any `γ ∈ (0, 1]`.
///
/// `∂ᵢF(x) − γ∂ᵢF(y)` is affine in `(x, y)`, so its minimum over
/// `0 ≤ x ≤ y ≤ 1` sits at a vertex, coordinatewise one of `(0,0)`, `(0,1)`,
/// `(1,1)`. With `P = hᵢ + Σ_{Hᵢⱼ<0} Hᵢⱼ` (the smallest `∂ᵢF`) and
/// `Q = Σ_{Hᵢⱼ>0} Hᵢⱼ` that minimum is `(1 − γ)P − γQ`, giving `γᵢ = P/(P+Q)`.
pub fn exact_gamma_quadratic(q: &QuadraticObjective) -> Option<f64> {
    let mut gamma = 1.0f64;
    for (row, h) in q.hessian().iter().zip(q.linear()) {
        let p = h + row.iter().filter(|v| **v < 0.0).sum::<f64>();
        let pos = row.iter().filter(|v| **v > 0.0).sum::<f64>();
        if p < 0.0 {
            // Non-monotone coordinate: only γ = 1 can work, and only without positive entries.
            if pos > 0.0 {
                return None;
            }
            continue;
        }
        if pos > 0.0 {
            gamma = gamma.min(p / (p + pos));
        }
    }
    (gamma > 0.0).then_some(gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    /// `H ≤ 0` entrywise with a linear term of either sign; γ = 1.
    Dr,
    /// Mixed-sign `H` with a linear term keeping the gradient nonnegative; γ ≤ 1.
    Monotone,
}

/// A quadratic objective, its exact γ and a body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifiedInstance {
    pub family: Family,
    pub objective: QuadraticObjective,
    pub gamma: f64,
    pub body: BodyKind,
}

impl CertifiedInstance {
    pub fn body(&self) -> Result<Body> {
        Body::new(self.body.clone())
    }
}

fn symmetric(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    let mut h = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = rng.gen_range(lo..hi);
            h[i][j] = v;
            h[j][i] = v;
        }
    }
    h
}

pub fn random_dr_quadratic(rng: &mut impl Rng, n: usize) -> Result<QuadraticObjective> {
    let hessian = symmetric(rng, n, -2.0, 0.0);
    let linear = (0..n).map(|_| rng.gen_range(-0.5..2.0)).collect();
    QuadraticObjective::with_nonnegative_offset(hessian, linear)
}

pub fn random_monotone_quadratic(rng: &mut impl Rng, n: usize) -> Result<QuadraticObjective> {
    let hessian = symmetric(rng, n, -1.0, 1.0);
    let linear = hessian
        .iter()
        .map(|row| -row.iter().filter(|v| **v < 0.0).sum::<f64>() + rng.gen_range(0.05..2.0))
        .collect();
    QuadraticObjective::with_nonnegative_offset(hessian, linear)
}

pub fn random_body(rng: &mut impl Rng, n: usize) -> BodyKind {
    match rng.gen_range(0..3) {
        0 => BodyKind::Box {
            upper: Point::new((0..n).map(|_| rng.gen_range(0.3..1.0)).collect()).expect("in range"),
        },
        1 => {
            let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
            let total: f64 = weights.iter().sum();
            let capacity = rng.gen_range(0.3..0.7) * total;
            BodyKind::Knapsack { weights, capacity }
        }
        _ => {
            let matrix: Vec<Vec<f64>> = (0..2).map(|_| (0..n).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
            let rhs = matrix.iter().map(|row| rng.gen_range(0.3..0.7) * row.iter().sum::<f64>()).collect();
            BodyKind::Polytope { matrix, rhs }
        }
    }
}

/// Draws an instance of dimension `n`, alternating families by a coin flip.
pub fn random_instance(rng: &mut impl Rng, n: usize) -> Result<CertifiedInstance> {
    let family = if rng.gen_bool(0.5) { Family::Dr } else { Family::Monotone };
    let objective = match family {
        Family::Dr => random_dr_quadratic(rng, n)?,
        Family::Monotone => random_monotone_quadratic(rng, n)?,
    };
    let gamma = exact_gamma_quadratic(&objective)
        .ok_or_else(|| Error::Precondition("generated quadratic is not weakly DR".into()))?;
    Ok(CertifiedInstance {
        family,
        objective,
        gamma,
        body: random_body(rng, n),
    })
}

/// Largest value of `F(ceiling ⊙ x)` over `x ∈ {0, 1/k, …, 1}^n`.
pub fn grid_maximum<F: Objective + ?Sized>(f: &F, ceiling: &Point, k: usize) -> Result<f64> {
    let n = f.dim();
    let mut best = f64::NEG_INFINITY;
    for code in 0..(k + 1).pow(n as u32) {
        let mut c = code;
        let coords = (0..n)
            .map(|_| {
                let j = c % (k + 1);
                c /= k + 1;
                j as f64 / k as f64
            })
            .collect();
        best = best.max(eval(f, &ceiling.hadamard(&Point::new(coords)?)?)?);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Lemmas,
    DoubleGreedy,
    FwgConsistency,
}

impl Suite {
    pub const ALL: [Suite; 3] = [Suite::Lemmas, Suite::DoubleGreedy, Suite::FwgConsistency];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Lemmas => "lemmas",
            Suite::DoubleGreedy => "double-greedy",
            Suite::FwgConsistency => "fwg-consistency",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    /// Number of random instances.
    pub trials: usize,
    pub seed: u64,
    /// Additive tolerance on every inequality.
    pub tol: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            trials: 50,
            seed: 0,
            tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub check: String,
    pub trial: usize,
    pub detail: String,
    pub instance: Option<CertifiedInstance>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckTally {
    pub passed: usize,
    pub total: usize,
    /// Instances on which this check ran.
    pub instances: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub trials: usize,
    pub tallies: BTreeMap<String, CheckTally>,
    pub failures: Vec<Failure>,
}

impl SuiteReport {
    fn new(suite: Suite, trials: usize) -> Self {
        SuiteReport {
            suite,
            trials,
            tallies: BTreeMap::new(),
            failures: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// Records the outcomes of one check on one instance; keeps the first failure.
    fn record(&mut self, check: &str, trial: usize, inst: Option<&CertifiedInstance>, outcomes: &[(bool, String)]) {
        let tally = self.tallies.entry(check.to_string()).or_default();
        tally.instances += 1;
        tally.total += outcomes.len();
        tally.passed += outcomes.iter().filter(|o| o.0).count();
        if let Some((_, detail)) = outcomes.iter().find(|o| !o.0) {
            self.failures.push(Failure {
                check: check.to_string(),
                trial,
                detail: detail.clone(),
                instance: inst.cloned(),
            });
        }
    }
}

pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> Result<SuiteReport> {
    match suite {
        Suite::Lemmas => lemma_suite(opts),
        Suite::DoubleGreedy => double_greedy_suite(opts),
        Suite::FwgConsistency => fwg_consistency_suite(opts),
    }
}

const PAIRS_PER_INSTANCE: usize = 20;

fn add(x: &Point, y: &Point, s: f64) -> Result<Point> {
    Point::new(x.iter().zip(y.iter()).map(|(a, b)| a + s * b).collect())
}

/// The supporting inequalities, each on every instance:
/// the convex-combination and increment bounds, the two gradient bounds, the
/// closure of the weak-DR property under `a ↦ F(a⊕y)` and `a ↦ F(a⊙y)`, and
/// the lattice value bound at a Frank–Wolfe local maximum.
pub fn lemma_suite(opts: &SuiteOptions) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(Suite::Lemmas, opts.trials);
    let mut r = rng(opts.seed);
    let tol = opts.tol;
    for trial in 0..opts.trials {
        let n = r.gen_range(1..=6);
        let inst = random_instance(&mut r, n)?;
        let f = &inst.objective;
        let g = inst.gamma;
        let g2 = g * g;

        let mut combo = Vec::new();
        let mut increment = Vec::new();
        let mut grad_plus = Vec::new();
        let mut grad_minus = Vec::new();
        for _ in 0..PAIRS_PER_INSTANCE {
            let lambda: f64 = r.gen();
            // x ≤ y
            let y = uniform_point(&mut r, n);
            let x = uniform_point(&mut r, n).hadamard(&y)?;
            let mix = add(&x.scale(lambda)?, &y, 1.0 - lambda)?;
            let rhs = (lambda * eval(f, &x)? + g2 * (1.0 - lambda) * eval(f, &y)?) / (lambda + g2 * (1.0 - lambda));
            let lhs = eval(f, &mix)?;
            combo.push((lhs >= rhs - tol, format!("F(mix)={lhs} < {rhs} at lambda={lambda}")));

            // x + y ≤ 1
            let x = uniform_point(&mut r, n);
            let y = uniform_point(&mut r, n).hadamard(&x.complement())?;
            let (fx, fxy) = (eval(f, &x)?, eval(f, &add(&x, &y, 1.0)?)?);
            let step = eval(f, &add(&x, &y, lambda)?)? - fx;
            let rhs = g2 * lambda / (1.0 - lambda + g2 * lambda) * (fxy - fx);
            increment.push((step >= rhs - tol, format!("increment {step} < {rhs} at lambda={lambda}")));
            let inner = y.dot(&grad(f, &x)?);
            grad_plus.push((inner >= g * (fxy - fx) - tol, format!("<grad,y>={inner} < gamma*{}", fxy - fx)));

            // x ≥ y ≥ 0
            let x = uniform_point(&mut r, n);
            let y = uniform_point(&mut r, n).hadamard(&x)?;
            let inner = y.dot(&grad(f, &x)?);
            let drop = eval(f, &x)? - eval(f, &add(&x, &y, -1.0)?)?;
            grad_minus.push((inner <= drop / g + tol, format!("<grad,y>={inner} > {drop}/gamma")));
        }
        report.record("convex-combination", trial, Some(&inst), &combo);
        report.record("increment", trial, Some(&inst), &increment);
        report.record("gradient-plus", trial, Some(&inst), &grad_plus);
        report.record("gradient-minus", trial, Some(&inst), &grad_minus);

        let anchor = uniform_point(&mut r, n);
        let seed = r.gen();
        let lifted = Lifted::new(f, anchor.clone())?;
        let restricted = Restricted::new(f, anchor)?;
        let closure: Vec<(bool, String)> = [("oplus", estimate_gamma(&lifted, 200, seed)?), ("odot", estimate_gamma(&restricted, 200, seed)?)]
            .into_iter()
            .map(|(which, est)| (est.gamma >= g - 0.02, format!("{which} composition estimated {} < {g} - 0.02", est.gamma)))
            .collect();
        let nonneg = (0..PAIRS_PER_INSTANCE)
            .map(|_| {
                let a = uniform_point(&mut r, n);
                let (u, v) = (lifted.value(&a), restricted.value(&a));
                (u >= -1e-9 && v >= -1e-9, format!("composition negative: {u}, {v}"))
            })
            .collect::<Vec<_>>();
        report.record("closure", trial, Some(&inst), &[closure, nonneg].concat());

        let body = inst.body()?;
        let local = fw_local_max(f, &body, None, 0.1, None)?;
        let x = &local.point;
        let gx = grad(f, x)?;
        let mut lattice = Vec::new();
        for _ in 0..PAIRS_PER_INSTANCE {
            let y = body.sample_point(&mut r);
            let gap = y.dot(&gx) - x.dot(&gx);
            lattice.push((gap <= local.min_fw_gap + tol, format!("<y-x,grad>={gap} exceeds gap {}", local.min_fw_gap)));
            let ok = lattice_bound_check(f, x, &y, g, local.min_fw_gap.max(0.0))?;
            lattice.push((ok, format!("lattice bound fails against y={:?}", y.coords())));
        }
        lattice.push((
            local.min_fw_gap <= local.certificate_bound + 1e-9,
            format!("gap {} above certificate {}", local.min_fw_gap, local.certificate_bound),
        ));
        report.record("local-max", trial, Some(&inst), &lattice);
    }
    Ok(report)
}

/// Grid double greedy against its guarantee with a brute-force optimum over
/// `{0, 0.1, …, 1}^n`, plus the exact value on `x(1 − x)`.
pub fn double_greedy_suite(opts: &SuiteOptions) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(Suite::DoubleGreedy, opts.trials);
    let mut r = rng(opts.seed);
    for trial in 0..opts.trials {
        let n = r.gen_range(1..=3);
        let inst = random_instance(&mut r, n)?;
        let f = &inst.objective;
        let eps = [0.1, 0.2, 0.25][trial % 3];
        let out = double_greedy(f, inst.gamma, eps)?;
        let ones = Point::ones(n);
        let bound = unbalanced_bound(grid_maximum(f, &ones, 10)?, eval(f, &Point::zeros(n))?, eval(f, &ones)?, inst.gamma, out.epsilon_used);
        let value = eval(f, &out.final_point)?;
        report.record(
            "unbalanced-bound",
            trial,
            Some(&inst),
            &[(value >= bound.bound - opts.tol, format!("F(output)={value} < bound {}", bound.bound))],
        );
    }
    let tent = QuadraticObjective::new(vec![vec![-2.0]], vec![1.0], 0.0)?;
    let value = eval(&tent, &double_greedy(&tent, 1.0, 0.5)?.final_point)?;
    report.record("tent-fixture", 0, None, &[(value == 0.25, format!("x(1-x) fixture gave {value}"))]);
    Ok(report)
}

/// The measured greedy against the closed form of its iterates, terminal
/// feasibility, and the per-step progress inequality.
pub fn fwg_consistency_suite(opts: &SuiteOptions) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(Suite::FwgConsistency, opts.trials);
    let mut r = rng(opts.seed);
    for trial in 0..opts.trials {
        let n = r.gen_range(1..=3);
        let inst = random_instance(&mut r, n)?;
        let f = &inst.objective;
        let body = inst.body()?;
        let z = body.sample_point(&mut r);
        let cfg = FwgConfig::new(r.gen_range(0.05..0.95), 0.2, 0.2, inst.gamma)?;
        // Guesses around the largest sampled value, so that some Q(i) are empty and some are not.
        let top = (0..50).map(|_| eval(f, &body.sample_point(&mut r))).collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max);
        let scale = r.gen_range(0.5..1.5);
        let triple = GuessTriple {
            g: scale * top,
            g_odot: r.gen_range(0.0..0.5) * top,
            g_oplus: r.gen_range(0.0..1.0) * top,
        };
        let out = run_fwg(f, &body, &z, &triple, &cfg)?;

        let mut closed = Vec::new();
        for i in 0..=cfg.steps() {
            let cf = closed_form_iterate(&out.x_sequence, &z, i, cfg.switch_index(), cfg.delta)?;
            let dist = cf.distance(&out.y_sequence[i]);
            closed.push((dist <= 1e-9, format!("step {i}: closed form differs by {dist}")));
        }
        report.record("closed-form", trial, Some(&inst), &closed);
        report.record(
            "terminal-feasible",
            trial,
            Some(&inst),
            &[(body.is_feasible(&out.y_final, 1e-7), format!("y_final {:?} outside body", out.y_final.coords()))],
        );

        let d = body.diameter().value;
        let slack = cfg.delta * cfg.delta * f.smoothness() * d * d / 2.0;
        let mut progress = Vec::new();
        for i in 1..=cfg.steps() {
            if !out.q_nonempty[i - 1] {
                continue;
            }
            let (prev, next) = (eval(f, &out.y_sequence[i - 1])?, eval(f, &out.y_sequence[i])?);
            let need = cfg.delta * cfg.gamma * (out.thresholds[i - 1] - prev) - slack;
            progress.push((next - prev >= need - 1e-6, format!("step {i}: gain {} < {need}", next - prev)));
        }
        report.record("per-step-progress", trial, Some(&inst), &progress);
    }
    Ok(report)
}
