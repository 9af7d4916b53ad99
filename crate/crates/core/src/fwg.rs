//! Frank–Wolfe guided measured continuous greedy.
//!
//! Over `m = δ⁻¹` steps the iterate grows as
//! `y(i) = y(i−1) + δ(𝟏 − y(i−1) − z(i−1)) ⊙ x(i)`, where `z(i) = z` before
//! the switch index `i_s` and `𝟎` after it, and `x(i)` is an approximate local
//! maximum of `F` over
//! `Q(i) = {x ∈ P : ⟨w(i), x⟩ ≥ γ(v(i−1) − F(y(i−1)))}` with
//! `w(i) = (𝟏 − y(i−1) − z(i−1)) ⊙ ∇F(y(i−1))`. The thresholds `v` are built
//! from a guessed triple `(g, g⊙, g⊕)` standing in for
//! `(F(o), F(z⊙o), F(z⊕o))`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::local_search::fw_local_max;
use crate::objective::{eval, grad, Objective};
use crate::point::{prob_sum_all, Point};
use crate::polytope::{Body, Halfspace};

/// Slack used when deciding that `Q(i)` is empty.
pub const EMPTY_TOL: f64 = 1e-9;

/// Which threshold is used at the overlap index `i = i_s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SwitchRule {
    #[default]
    V1,
    V2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FwgConfig {
    pub t_s: f64,
    pub epsilon: f64,
    /// Normalized so that `δ⁻¹` is an integer and `δ ≤ ε`.
    pub delta: f64,
    pub gamma: f64,
    pub switch_rule: SwitchRule,
}

fn ceil_tol(x: f64) -> usize {
    (x - 1e-9).ceil().max(0.0) as usize
}

impl FwgConfig {
    /// Validates the inputs and replaces `δ` by `1/⌈1/min(δ, ε)⌉`.
    pub fn new(t_s: f64, epsilon: f64, delta: f64, gamma: f64) -> Result<Self> {
        if !(t_s > 0.0 && t_s < 1.0) {
            return Err(Error::Parameter(format!("t_s must lie in (0,1), got {t_s}")));
        }
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(Error::Parameter(format!("epsilon must lie in (0,1/2), got {epsilon}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Parameter(format!("delta must lie in (0,1), got {delta}")));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::Parameter(format!("gamma must lie in (0,1], got {gamma}")));
        }
        let delta = 1.0 / ceil_tol(1.0 / delta.min(epsilon)) as f64;
        Ok(FwgConfig {
            t_s,
            epsilon,
            delta,
            gamma,
            switch_rule: SwitchRule::V1,
        })
    }

    pub fn with_switch_rule(mut self, rule: SwitchRule) -> Self {
        self.switch_rule = rule;
        self
    }

    /// `δ⁻¹`.
    pub fn steps(&self) -> usize {
        (1.0 / self.delta).round() as usize
    }

    /// `⌈t_s/δ⌉`.
    pub fn switch_index(&self) -> usize {
        ceil_tol(self.t_s / self.delta)
    }

    /// `γ²δ / (1 − δ + γ²δ)`.
    pub fn beta(&self) -> f64 {
        let g2 = self.gamma * self.gamma;
        g2 * self.delta / (1.0 - self.delta + g2 * self.delta)
    }

    pub fn schedule(&self) -> ThresholdSchedule {
        ThresholdSchedule {
            beta: self.beta(),
            switch_index: self.switch_index(),
            gamma: self.gamma,
            epsilon: self.epsilon,
        }
    }
}

/// The scalars the thresholds depend on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSchedule {
    pub beta: f64,
    pub switch_index: usize,
    pub gamma: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuessTriple {
    pub g: f64,
    pub g_odot: f64,
    pub g_oplus: f64,
}

/// `[(1−β)^i + (1 − (1−β)^i − 2ε)/γ]·g − g⊙/γ − [(1 − (1−β)^i)/γ]·g⊕`.
pub fn threshold_v1(i: usize, t: &GuessTriple, s: &ThresholdSchedule) -> f64 {
    let decay = (1.0 - s.beta).powi(i as i32);
    (decay + (1.0 - decay - 2.0 * s.epsilon) / s.gamma) * t.g - t.g_odot / s.gamma - (1.0 - decay) / s.gamma * t.g_oplus
}

/// `(1−β)^i·[((1−β)^{−i_s}/γ − (1 + 3/γ)ε + 1 − 1/γ)·g − ((1−β)^{−i_s}/γ − 1/γ − β(i − i_s))·g⊕]`.
pub fn threshold_v2(i: usize, t: &GuessTriple, s: &ThresholdSchedule) -> f64 {
    let q = 1.0 - s.beta;
    let back = q.powi(-(s.switch_index as i32)) / s.gamma;
    let steps_past = i as f64 - s.switch_index as f64;
    let g_coef = back - (1.0 + 3.0 / s.gamma) * s.epsilon + 1.0 - 1.0 / s.gamma;
    let oplus_coef = back - 1.0 / s.gamma - s.beta * steps_past;
    q.powi(i as i32) * (g_coef * t.g - oplus_coef * t.g_oplus)
}

/// `v(i)`: `v1` before the switch, `v2` after it, and `rule` at `i = i_s`.
pub fn threshold(i: usize, t: &GuessTriple, s: &ThresholdSchedule, rule: SwitchRule) -> f64 {
    let use_v1 = i < s.switch_index || (i == s.switch_index && rule == SwitchRule::V1);
    if use_v1 {
        threshold_v1(i, t, s)
    } else {
        threshold_v2(i, t, s)
    }
}

/// Enumerates `⋃_{g ∈ G_o} {g} × G⊙(g) × G⊕(g)` where
/// `G_o = {(1−ε)^i·v/c : 0 ≤ i ≤ ⌈log_{1−ε} c⌉}`,
/// `G⊙(g) = {εig : 0 ≤ i ≤ ⌈1/(ε(1−ε))⌉}` and
/// `G⊕(g) = {εig : 0 ≤ i ≤ ⌈(1 + 1/γ)/(ε(1−ε))⌉}`.
pub fn guess_triples(v: f64, c: f64, gamma: f64, epsilon: f64) -> Result<Vec<GuessTriple>> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::Parameter(format!("c must lie in (0,1], got {c}")));
    }
    if !(v >= 0.0 && v.is_finite()) {
        return Err(Error::Parameter(format!("v must be finite and nonnegative, got {v}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) || !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Parameter("epsilon must lie in (0,1) and gamma in (0,1]".into()));
    }
    let levels = ceil_tol(c.ln() / (1.0 - epsilon).ln());
    let odot_top = ceil_tol(1.0 / (epsilon * (1.0 - epsilon)));
    let oplus_top = ceil_tol((1.0 + 1.0 / gamma) / (epsilon * (1.0 - epsilon)));
    let mut out = Vec::with_capacity((levels + 1) * (odot_top + 1) * (oplus_top + 1));
    for i in 0..=levels {
        let g = (1.0 - epsilon).powi(i as i32) * v / c;
        for a in 0..=odot_top {
            for b in 0..=oplus_top {
                out.push(GuessTriple {
                    g,
                    g_odot: epsilon * a as f64 * g,
                    g_oplus: epsilon * b as f64 * g,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FwgOutput {
    pub y_final: Point,
    /// `x(1), …, x(m)`.
    pub x_sequence: Vec<Point>,
    /// `y(0), …, y(m)`.
    pub y_sequence: Vec<Point>,
    /// `v(0), …, v(m−1)`.
    pub thresholds: Vec<f64>,
    /// Whether `Q(i)` was nonempty, for `i = 1, …, m`.
    pub q_nonempty: Vec<bool>,
    /// First step `i` with `Q(i) = ∅`.
    pub q_empty_at: Option<usize>,
    pub triple_used: GuessTriple,
    /// `|v1(i_s) − v2(i_s)|`.
    pub switch_gap: f64,
}

pub fn run_fwg<F: Objective + ?Sized>(
    f: &F,
    body: &Body,
    z: &Point,
    triple: &GuessTriple,
    cfg: &FwgConfig,
) -> Result<FwgOutput> {
    let n = body.dim();
    z.check_dim(n)?;
    if f.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: f.dim(),
        });
    }
    if !body.is_feasible(z, 1e-9) {
        return Err(Error::Precondition("z is not in the body".into()));
    }
    let schedule = cfg.schedule();
    let m = cfg.steps();
    let thresholds: Vec<f64> = (0..m).map(|i| threshold(i, triple, &schedule, cfg.switch_rule)).collect();
    let origin = Point::zeros(n);

    let mut y = origin.clone();
    let mut y_sequence = vec![y.clone()];
    let mut x_sequence = Vec::with_capacity(m);
    let mut q_nonempty = Vec::with_capacity(m);
    let mut q_empty_at = None;
    for i in 1..=m {
        let zi = if i - 1 < schedule.switch_index { z } else { &origin };
        let room: Vec<f64> = (0..n).map(|k| (1.0 - y[k] - zi[k]).max(0.0)).collect();
        let g = grad(f, &y)?;
        let w: Vec<f64> = room.iter().zip(&g).map(|(r, d)| r * d).collect();
        let level = cfg.gamma * (thresholds[i - 1] - eval(f, &y)?);
        let best = body.lp_maximize(&w, None)?;
        let x = if best.value < level - EMPTY_TOL {
            q_empty_at.get_or_insert(i);
            q_nonempty.push(false);
            origin.clone()
        } else {
            q_nonempty.push(true);
            // The maximizer of ⟨w, ·⟩ lies in Q(i); start the local search there.
            // Within EMPTY_TOL of empty, Q(i) is the optimal face; use its exact level.
            let cut = Halfspace::new(w, level.min(best.value));
            fw_local_max(f, body, Some(&cut), cfg.delta, Some(&best.point))?.point
        };
        y = Point::new((0..n).map(|k| y[k] + cfg.delta * room[k] * x[k]).collect())?;
        x_sequence.push(x);
        y_sequence.push(y.clone());
    }
    let at = schedule.switch_index;
    Ok(FwgOutput {
        y_final: y,
        x_sequence,
        y_sequence,
        thresholds,
        q_nonempty,
        q_empty_at,
        triple_used: *triple,
        switch_gap: (threshold_v1(at, triple, &schedule) - threshold_v2(at, triple, &schedule)).abs(),
    })
}

/// Runs every triple and keeps the output with the largest `F(y_final)`,
/// preferring the earliest triple on ties.
pub fn run_fwg_best<F: Objective + ?Sized>(
    f: &F,
    body: &Body,
    z: &Point,
    triples: &[GuessTriple],
    cfg: &FwgConfig,
) -> Result<FwgOutput> {
    let runs: Vec<(f64, FwgOutput)> = triples
        .par_iter()
        .map(|t| {
            let out = run_fwg(f, body, z, t, cfg)?;
            Ok((eval(f, &out.y_final)?, out))
        })
        .collect::<Result<_>>()?;
    runs.into_iter()
        .reduce(|best, next| if next.0 > best.0 { next } else { best })
        .map(|(_, out)| out)
        .ok_or_else(|| Error::Parameter("no guess triples supplied".into()))
}

/// `y(i)` recomputed from the `x` sequence:
/// `(𝟏−z) ⊙ ⊕_{j≤i} δx(j)`, plus `z ⊙ ⊕_{i_s<j≤i} δx(j)` once `i ≥ i_s`.
pub fn closed_form_iterate(x_sequence: &[Point], z: &Point, i: usize, switch_index: usize, delta: f64) -> Result<Point> {
    let n = z.dim();
    let scaled: Vec<Point> = x_sequence[..i].iter().map(|x| x.scale(delta)).collect::<Result<_>>()?;
    let all = prob_sum_all(n, &scaled)?;
    let head = z.complement().hadamard(&all)?;
    if i <= switch_index {
        return Ok(head);
    }
    let tail = z.hadamard(&prob_sum_all(n, &scaled[switch_index..])?)?;
    Point::new(head.iter().zip(tail.iter()).map(|(a, b)| a + b).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{ConstantObjective, QuadraticObjective};

    fn sched(beta: f64, i_s: usize, gamma: f64, epsilon: f64) -> ThresholdSchedule {
        ThresholdSchedule {
            beta,
            switch_index: i_s,
            gamma,
            epsilon,
        }
    }

    fn triple(g: f64, g_odot: f64, g_oplus: f64) -> GuessTriple {
        GuessTriple { g, g_odot, g_oplus }
    }

    #[test]
    fn config_normalization() {
        let c = FwgConfig::new(0.5, 0.25, 0.3, 1.0).unwrap();
        assert_eq!(c.delta, 0.25);
        assert_eq!(c.steps(), 4);
        assert_eq!(c.switch_index(), 2);
        let c = FwgConfig::new(0.5, 0.3, 0.1, 0.5).unwrap();
        assert_eq!(c.delta, 0.1);
        assert_eq!(c.switch_index(), 5);
        let c = FwgConfig::new(0.37, 0.45, 0.3, 0.5).unwrap();
        assert_eq!(c.delta, 0.25);
        assert_eq!(c.switch_index(), 2);
        assert!(FwgConfig::new(0.5, 0.5, 0.1, 1.0).is_err());
        assert!(FwgConfig::new(1.0, 0.2, 0.1, 1.0).is_err());
    }

    #[test]
    fn beta_formula() {
        let c = FwgConfig::new(0.5, 0.25, 0.25, 0.5).unwrap();
        assert!((c.beta() - 0.0625 / (0.75 + 0.0625)).abs() < 1e-15);
        assert!((FwgConfig::new(0.5, 0.25, 0.25, 1.0).unwrap().beta() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn v1_examples() {
        let s = sched(0.1, 3, 0.5, 0.1);
        let t = triple(1.0, 0.2, 0.3);
        assert!((threshold_v1(0, &t, &s) - ((1.0 - 0.2 / 0.5) - 0.2 / 0.5)).abs() < 1e-15);
        assert!((threshold_v1(2, &t, &s) - 0.276).abs() < 1e-12);
        let unit = triple(1.0, 0.0, 0.0);
        for i in 0..6 {
            assert!((threshold_v1(i, &unit, &sched(0.3, 6, 1.0, 0.0)) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn v2_examples() {
        let s = sched(0.1, 1, 0.5, 0.1);
        let v = threshold_v2(3, &triple(1.0, 0.0, 0.5), &s);
        // 0.729 · (0.5222… − 0.5 · 0.0222…)
        let expect = 0.729 * ((1.0 / 0.9 / 0.5 - 0.7 + 1.0 - 2.0) - 0.5 * (1.0 / 0.9 / 0.5 - 2.0 - 0.2));
        assert!((v - expect).abs() < 1e-14);
        assert!((v - 0.3726).abs() < 1e-4);

        let (beta, i_s) = (0.2, 3);
        let s = sched(beta, i_s, 1.0, 0.0);
        let t = triple(1.0, 0.0, 0.4);
        let at = threshold_v2(i_s, &t, &s);
        assert!((at - (1.0 - (1.0 - (1.0 - beta).powi(3)) * 0.4)).abs() < 1e-14);
        let t = triple(1.0, 0.0, 0.0);
        for i in i_s..8 {
            assert!((threshold_v2(i, &t, &s) - (1.0 - beta).powi((i - i_s) as i32)).abs() < 1e-14);
        }
    }

    #[test]
    fn switch_rule_picks_threshold_at_overlap() {
        let s = sched(0.1, 2, 0.5, 0.1);
        let t = triple(1.0, 0.2, 0.3);
        assert_eq!(threshold(2, &t, &s, SwitchRule::V1), threshold_v1(2, &t, &s));
        assert_eq!(threshold(2, &t, &s, SwitchRule::V2), threshold_v2(2, &t, &s));
        assert_eq!(threshold(1, &t, &s, SwitchRule::V2), threshold_v1(1, &t, &s));
        assert_eq!(threshold(3, &t, &s, SwitchRule::V1), threshold_v2(3, &t, &s));
    }

    #[test]
    fn triple_count_example() {
        let ts = guess_triples(1.0, 1.0, 1.0, 0.5).unwrap();
        assert_eq!(ts.len(), 45);
        assert!(ts.iter().all(|t| t.g == 1.0));
        assert!(guess_triples(1.0, 0.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn triples_respect_grid_endpoints() {
        let (v, c, gamma, eps) = (2.0, 0.2, 0.6, 0.3f64);
        let top = (1.0 / (eps * (1.0 - eps))).ceil();
        for t in guess_triples(v, c, gamma, eps).unwrap() {
            assert!(t.g <= v / c + 1e-12 && t.g_odot >= 0.0 && t.g_oplus >= 0.0);
            assert!(t.g_odot <= eps * t.g * top + 1e-12);
        }
    }

    #[test]
    fn triples_cover_random_targets() {
        use rand::Rng;
        let mut r = crate::sampling::rng(9);
        for _ in 0..200 {
            let gamma = r.gen_range(0.1..=1.0);
            let eps = r.gen_range(0.1..0.45);
            let c = r.gen_range(0.1..=1.0);
            let f_o = r.gen_range(0.1..10.0);
            let v = r.gen_range(c * f_o..=f_o);
            let f_odot = r.gen_range(0.0..=f_o);
            let f_oplus = r.gen_range(0.0..=(1.0 + 1.0 / gamma) * f_o);
            let ok = guess_triples(v, c, gamma, eps).unwrap().iter().any(|t| {
                (1.0 - eps) * f_o <= t.g
                    && t.g <= f_o
                    && f_odot - eps * t.g <= t.g_odot
                    && t.g_odot <= f_odot
                    && f_oplus - eps * t.g <= t.g_oplus
                    && t.g_oplus <= f_oplus
            });
            assert!(ok, "no triple covers f_o={f_o} v={v} c={c}");
        }
    }

    #[test]
    fn one_dimensional_measured_growth() {
        let f = QuadraticObjective::new(vec![vec![-2.0]], vec![2.0], 0.0).unwrap();
        let cfg = FwgConfig::new(0.5, 0.25, 0.25, 1.0).unwrap();
        let out = run_fwg(&f, &Body::unit_box(1), &Point::zeros(1), &triple(1.0, 0.0, 0.0), &cfg).unwrap();
        assert_eq!(out.x_sequence.len(), 4);
        // Every Q(i) contains 1 here, and its local maximum is 1.
        for x in &out.x_sequence {
            assert!((x[0] - 1.0).abs() < 1e-9);
        }
        assert!((out.y_final[0] - (1.0 - 0.75f64.powi(4))).abs() < 1e-9);
    }

    #[test]
    fn constant_objective_keeps_value() {
        let f = ConstantObjective { dim: 2, value: 3.0 };
        let cfg = FwgConfig::new(0.5, 0.25, 0.25, 0.8).unwrap();
        let body = Body::knapsack(vec![1.0, 1.0], 1.0).unwrap();
        for t in [triple(0.0, 0.0, 0.0), triple(10.0, 0.0, 0.0)] {
            let out = run_fwg(&f, &body, &Point::zeros(2), &t, &cfg).unwrap();
            for (i, ok) in out.q_nonempty.iter().enumerate() {
                assert_eq!(*ok, 0.0 >= 0.8 * (out.thresholds[i] - 3.0) - EMPTY_TOL);
            }
            assert!(out.y_sequence.iter().all(|y| f.value(y) == 3.0));
        }
    }

    #[test]
    fn closed_form_agrees_and_iterates_stay_feasible() {
        use rand::Rng;
        let mut r = crate::sampling::rng(31);
        for trial in 0..12 {
            let n = 1 + trial % 3;
            let inst = crate::verify::random_instance(&mut r, n).unwrap();
            let body = inst.body().unwrap();
            let z = body.sample_point(&mut r);
            let t_s = r.gen_range(0.05..0.95);
            let cfg = FwgConfig::new(t_s, 0.25, 0.25, inst.gamma).unwrap();
            let f_top = (0..50).map(|_| inst.objective.value(&body.sample_point(&mut r))).fold(0.0, f64::max);
            let t = triple(f_top, 0.3 * f_top, 0.5 * f_top);
            let out = run_fwg(&inst.objective, &body, &z, &t, &cfg).unwrap();
            for i in 0..=cfg.steps() {
                let cf = closed_form_iterate(&out.x_sequence, &z, i, cfg.switch_index(), cfg.delta).unwrap();
                assert!(cf.distance(&out.y_sequence[i]) < 1e-9, "trial {trial} step {i}");
            }
            assert!(body.is_feasible(&out.y_final, 1e-7));
            assert!(out.x_sequence.iter().all(|x| body.is_feasible(x, 1e-7)));
        }
    }

    #[test]
    fn per_step_progress() {
        use rand::Rng;
        let mut r = crate::sampling::rng(32);
        for trial in 0..12 {
            let n = 1 + trial % 3;
            let inst = crate::verify::random_instance(&mut r, n).unwrap();
            let f = &inst.objective;
            let body = inst.body().unwrap();
            let z = body.sample_point(&mut r);
            let cfg = FwgConfig::new(r.gen_range(0.05..0.95), 0.2, 0.2, inst.gamma).unwrap();
            let t = triple(f.value(&body.bounding_box()), 0.0, 0.0);
            let out = run_fwg(f, &body, &z, &t, &cfg).unwrap();
            let d = body.diameter().value;
            let slack = cfg.delta * cfg.delta * f.smoothness() * d * d / 2.0;
            for i in 1..=cfg.steps() {
                if !out.q_nonempty[i - 1] {
                    continue;
                }
                let (prev, next) = (f.value(&out.y_sequence[i - 1]), f.value(&out.y_sequence[i]));
                assert!(next - prev >= cfg.delta * cfg.gamma * (out.thresholds[i - 1] - prev) - slack - 1e-6);
            }
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let f = QuadraticObjective::new(vec![vec![-1.0, -0.5], vec![-0.5, -1.0]], vec![1.0, 1.2], 0.0).unwrap();
        let body = Body::knapsack(vec![1.0, 0.7], 0.8).unwrap();
        let cfg = FwgConfig::new(0.4, 0.25, 0.25, 1.0).unwrap();
        let z = Point::new(vec![0.2, 0.3]).unwrap();
        let ts = guess_triples(0.5, 0.5, 1.0, 0.4).unwrap();
        let a = run_fwg_best(&f, &body, &z, &ts, &cfg).unwrap();
        let b = run_fwg_best(&f, &body, &z, &ts, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
