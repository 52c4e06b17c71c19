//! Ergonomic posture optimization: minimize the weighted squared overloading
//! torques subject to joint limits, CoP-in-support stability and a hand-height
//! task constraint.
//!
//! The solver is a deterministic multi-start direct search. Each restart first
//! drives the quadratic penalty of the positive slacks to zero, then descends the
//! objective while rejecting any infeasible poll point. Joint limits are handled
//! by projection, so bound slacks are never positive along the way.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::body::{forward_kinematics, support_polygon, HumanModel, Posture};
use crate::error::{Error, Result};
use crate::joint::{Joint, N_JOINTS};
use crate::loading::{overloading_torques_oracle, simulate_plate, LoadSpec};
use crate::Scalar;

/// Slack tolerance below which a constraint counts as satisfied.
pub const FEASIBILITY_TOL: f64 = 1e-6;

/// Keep the held object near a reference height: `|z_obj - z_ref| <= z_th`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskConstraint<T> {
    pub z_ref: T,
    pub z_th: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub penalty_coefficient: f64,
    pub seed: u64,
    pub initial_step_deg: f64,
    pub min_step_deg: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            restarts: 16,
            max_iters: 4000,
            penalty_coefficient: 1e6,
            seed: 0,
            initial_step_deg: 8.0,
            min_step_deg: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizationSpec<T> {
    pub weights: [T; N_JOINTS],
    pub task: TaskConstraint<T>,
    /// Joints the optimizer may move; the others stay at their initial value.
    pub free: [bool; N_JOINTS],
    pub solver: SolverOptions,
}

impl<T: Scalar> OptimizationSpec<T> {
    /// Unit weights, all joints free, `z_ref` taken from the initial posture.
    pub fn for_initial(model: &HumanModel<T>, q_init: &Posture<T>, z_th: T) -> Self {
        Self {
            weights: [T::one(); N_JOINTS],
            task: TaskConstraint {
                z_ref: forward_kinematics(model, q_init).z_obj,
                z_th,
            },
            free: [true; N_JOINTS],
            solver: SolverOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.iter().any(|&w| !(w >= T::zero())) {
            return Err(Error::Config("weights must be non-negative".into()));
        }
        if !self.weights.iter().any(|&w| w > T::zero()) {
            return Err(Error::Config("at least one weight must be positive".into()));
        }
        if !(self.task.z_th >= T::zero()) {
            return Err(Error::Config("z_th must be non-negative".into()));
        }
        if !self.free.iter().any(|&f| f) {
            return Err(Error::Config("no free joints".into()));
        }
        Ok(())
    }
}

/// Constraint slacks; a constraint holds when its slack is `<= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport<T> {
    /// `max(q_min - q, q - q_max)` per joint, degrees.
    pub bounds: [T; N_JOINTS],
    /// Distance of the loaded CoP outside the support interval, metres.
    pub stability: T,
    /// `|z_obj - z_ref| - z_th`, metres.
    pub task: T,
    pub feasible: bool,
}

impl<T: Scalar> ConstraintReport<T> {
    pub fn max_slack(&self) -> T {
        self.bounds
            .iter()
            .fold(self.stability.max(self.task), |a, &b| a.max(b))
    }
}

/// `0.5 * Σ w_k τ_k²` over the overloading torques.
pub fn objective<T: Scalar>(
    model: &HumanModel<T>,
    posture: &Posture<T>,
    load: &LoadSpec<T>,
    weights: &[T; N_JOINTS],
) -> T {
    let tau = overloading_torques_oracle(model, posture, load);
    let sum = tau
        .0
        .iter()
        .zip(weights.iter())
        .fold(T::zero(), |a, (&t, &w)| a + w * t * t);
    sum * T::lit(0.5)
}

pub fn evaluate_constraints<T: Scalar>(
    model: &HumanModel<T>,
    posture: &Posture<T>,
    load: &LoadSpec<T>,
    spec: &OptimizationSpec<T>,
) -> ConstraintReport<T> {
    let bounds = std::array::from_fn(|i| {
        let lim = model.limits()[i];
        let q = posture.angles[i];
        (lim.min_deg - q).max(q - lim.max_deg)
    });
    let support = support_polygon(model).expect("model guarantees a valid foot");
    let stability = support.slack(simulate_plate(model, posture, load).cop_x);
    let z = forward_kinematics(model, posture).z_obj;
    let task = (z - spec.task.z_ref).abs() - spec.task.z_th;
    let mut report = ConstraintReport {
        bounds,
        stability,
        task,
        feasible: false,
    };
    report.feasible = report.max_slack() <= T::lit(FEASIBILITY_TOL);
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveReport<T> {
    pub objective_init: T,
    pub objective_final: T,
    pub constraints: ConstraintReport<T>,
    pub iterations: usize,
    /// Restart that produced the returned posture (0 is the initial posture).
    pub restart: usize,
}

struct Problem<'a, T> {
    model: &'a HumanModel<T>,
    load: &'a LoadSpec<T>,
    spec: &'a OptimizationSpec<T>,
    base: Posture<T>,
    free: Vec<usize>,
}

impl<T: Scalar> Problem<'_, T> {
    fn posture(&self, x: &[T]) -> Posture<T> {
        let mut p = self.base;
        for (&j, &v) in self.free.iter().zip(x) {
            let lim = self.model.limits()[j];
            p.angles[j] = v.max(lim.min_deg).min(lim.max_deg);
        }
        p
    }

    fn penalty(&self, p: &Posture<T>) -> T {
        let r = evaluate_constraints(self.model, p, self.load, self.spec);
        let pos = |s: T| s.max(T::zero());
        let b = r.bounds.iter().fold(T::zero(), |a, &s| a + pos(s) * pos(s));
        pos(r.stability).powi(2) + pos(r.task).powi(2) + b
    }

    fn cost(&self, p: &Posture<T>) -> T {
        objective(self.model, p, self.load, &self.spec.weights)
    }
}

/// Random orthonormal basis (Householder reflection of the identity).
fn poll_directions<T: Scalar>(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<T>> {
    let mut u: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
    u.iter_mut().for_each(|v| *v /= norm);
    let mut dirs = Vec::with_capacity(4 * n);
    for k in 0..n {
        let col: Vec<T> = (0..n)
            .map(|i| {
                let id = if i == k { 1.0 } else { 0.0 };
                T::lit(id - 2.0 * u[i] * u[k])
            })
            .collect();
        dirs.push(col.iter().map(|&v| -v).collect());
        dirs.push(col);
    }
    for k in 0..n {
        let mut e = vec![T::zero(); n];
        e[k] = T::one();
        dirs.push(e.clone());
        e[k] = -T::one();
        dirs.push(e);
    }
    dirs
}

struct LocalResult<T> {
    x: Vec<T>,
    cost: T,
    penalty: T,
    iterations: usize,
}

fn local_search<T: Scalar>(problem: &Problem<'_, T>, start: Vec<T>, rng: &mut ChaCha8Rng) -> LocalResult<T> {
    let opts = &problem.spec.solver;
    let n = start.len();
    let min_step = T::lit(opts.min_step_deg);
    let mut x = start;
    let mut p = problem.posture(&x);
    let mut pen = problem.penalty(&p);
    let mut cost = problem.cost(&p);
    let mut step = T::lit(opts.initial_step_deg);
    let mut iterations = 0;
    while iterations < opts.max_iters && step >= min_step {
        iterations += 1;
        let feasible = pen <= T::zero();
        let dirs = poll_directions::<T>(n, rng);
        let mut improved = false;
        for d in &dirs {
            let cand: Vec<T> = x.iter().zip(d).map(|(&xi, &di)| xi + step * di).collect();
            let cp = problem.posture(&cand);
            let cpen = problem.penalty(&cp);
            let accept = if feasible {
                cpen <= T::zero() && {
                    let c = problem.cost(&cp);
                    c < cost
                }
            } else {
                cpen < pen
            };
            if accept {
                // store the projected point so x always lies inside the box
                x = problem.free.iter().map(|&j| cp.angles[j]).collect();
                p = cp;
                pen = cpen;
                cost = problem.cost(&p);
                improved = true;
                break;
            }
        }
        if improved {
            step = step * T::lit(2.0);
            let cap = T::lit(opts.initial_step_deg * 4.0);
            if step > cap {
                step = cap;
            }
        } else {
            step = step * T::lit(0.5);
        }
    }
    LocalResult {
        x,
        cost,
        penalty: pen,
        iterations,
    }
}

/// Solve for the ergonomic posture starting from `q_init`.
pub fn optimize_posture<T: Scalar>(
    model: &HumanModel<T>,
    q_init: &Posture<T>,
    load: &LoadSpec<T>,
    spec: &OptimizationSpec<T>,
) -> Result<(Posture<T>, SolveReport<T>)> {
    spec.validate()?;
    let objective_init = objective(model, q_init, load, &spec.weights);
    let init_report = evaluate_constraints(model, q_init, load, spec);
    if objective_init <= T::zero() && init_report.feasible {
        return Ok((
            *q_init,
            SolveReport {
                objective_init,
                objective_final: objective_init,
                constraints: init_report,
                iterations: 0,
                restart: 0,
            },
        ));
    }
    let free: Vec<usize> = (0..N_JOINTS).filter(|&i| spec.free[i]).collect();
    let problem = Problem {
        model,
        load,
        spec,
        base: *q_init,
        free: free.clone(),
    };
    let mu = T::lit(spec.solver.penalty_coefficient);
    let mut best: Option<(Posture<T>, T, usize)> = None;
    let mut best_penalty = T::infinity();
    let mut total_iters = 0;
    for r in 0..=spec.solver.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.solver.seed.wrapping_add(r as u64 * 0x9E37_79B9));
        let start: Vec<T> = if r == 0 {
            free.iter().map(|&j| q_init.angles[j]).collect()
        } else {
            free.iter()
                .map(|&j| {
                    let lim = model.limits()[j];
                    lim.min_deg + (lim.max_deg - lim.min_deg) * T::lit(rng.random::<f64>())
                })
                .collect()
        };
        let res = local_search(&problem, start, &mut rng);
        total_iters += res.iterations;
        let merit = res.cost + mu * res.penalty;
        if res.penalty > T::zero() {
            best_penalty = best_penalty.min(merit);
            continue;
        }
        let p = problem.posture(&res.x);
        if best.as_ref().is_none_or(|&(_, c, _)| res.cost < c) {
            best = Some((p, res.cost, r));
        }
    }
    let Some((mut q_d, mut cost, restart)) = best else {
        return Err(Error::Infeasible {
            restarts: spec.solver.restarts + 1,
            best_penalty: best_penalty.as_f64(),
        });
    };
    // never return something worse than a feasible starting point
    if init_report.feasible && objective_init <= cost {
        q_d = *q_init;
        cost = objective_init;
    }
    q_d.timestamp = q_init.timestamp;
    Ok((
        q_d,
        SolveReport {
            objective_init,
            objective_final: cost,
            constraints: evaluate_constraints(model, &q_d, load, spec),
            iterations: total_iters,
            restart,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GridOptimum<T> {
    pub posture: Posture<T>,
    pub objective: T,
    pub evaluated: usize,
}

/// Exhaustive scan of the free joints on a regular grid anchored at `q_min`.
///
/// Frozen joints keep their value from `base`. Returns `Ok(None)` when no grid
/// point is feasible.
pub fn grid_oracle<T: Scalar>(
    model: &HumanModel<T>,
    base: &Posture<T>,
    load: &LoadSpec<T>,
    spec: &OptimizationSpec<T>,
    resolution_deg: T,
) -> Result<Option<GridOptimum<T>>> {
    spec.validate()?;
    if !(resolution_deg > T::zero()) {
        return Err(Error::Input("grid resolution must be positive".into()));
    }
    let axes: Vec<(usize, Vec<T>)> = (0..N_JOINTS)
        .filter(|&j| spec.free[j])
        .map(|j| {
            let lim = model.limits()[j];
            let count = ((lim.max_deg - lim.min_deg) / resolution_deg + T::tiny())
                .floor()
                .to_usize()
                .unwrap_or(0)
                + 1;
            let vals = (0..count)
                .map(|k| lim.min_deg + resolution_deg * T::lit(k as f64))
                .collect();
            (j, vals)
        })
        .collect();
    let total = axes
        .iter()
        .try_fold(1usize, |acc, (_, v)| acc.checked_mul(v.len()))
        .unwrap_or(usize::MAX);
    if total >= 10_000_000 {
        return Err(Error::Input(format!("grid of {total} points is too fine")));
    }
    let mut best: Option<GridOptimum<T>> = None;
    let mut idx = vec![0usize; axes.len()];
    for _ in 0..total {
        let mut p = *base;
        for (k, (j, vals)) in axes.iter().enumerate() {
            p.angles[*j] = vals[idx[k]];
        }
        if evaluate_constraints(model, &p, load, spec).feasible {
            let f = objective(model, &p, load, &spec.weights);
            if best.as_ref().is_none_or(|b| f < b.objective) {
                best = Some(GridOptimum {
                    posture: p,
                    objective: f,
                    evaluated: total,
                });
            }
        }
        for k in (0..idx.len()).rev() {
            idx[k] += 1;
            if idx[k] < axes[k].1.len() {
                break;
            }
            idx[k] = 0;
        }
    }
    Ok(best.map(|b| GridOptimum { evaluated: total, ..b }))
}

/// Frees only the guided upper-body joints (trunk, shoulder, elbow).
pub fn upper_body_only() -> [bool; N_JOINTS] {
    let mut free = [false; N_JOINTS];
    for j in [Joint::Hip, Joint::Shoulder, Joint::Elbow] {
        free[j.index()] = true;
    }
    free
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn model() -> HumanModel<f64> {
        HumanModel::default()
    }

    fn bent() -> Posture<f64> {
        Posture::new([-5.0, 10.0, 45.0, -60.0, -20.0])
    }

    #[test]
    fn objective_zero_without_load() {
        assert_eq!(objective(&model(), &bent(), &LoadSpec::none(), &[1.0; 5]), 0.0);
    }

    #[test]
    fn objective_matches_recomputation() {
        let m = model();
        let load = LoadSpec::new(4.0).unwrap();
        let tau = overloading_torques_oracle(&m, &bent(), &load);
        let by_hand: f64 = tau.0.iter().map(|t| t * t).sum::<f64>() / 2.0;
        assert_abs_diff_eq!(objective(&m, &bent(), &load, &[1.0; 5]), by_hand, epsilon = 1e-9);
    }

    #[test]
    fn torso_beyond_limit_reports_bound_slack() {
        let m = model();
        let p = Posture::zero().with(Joint::Hip, 95.0);
        let spec = OptimizationSpec::for_initial(&m, &p, 0.1);
        let r = evaluate_constraints(&m, &p, &LoadSpec::none(), &spec);
        assert_abs_diff_eq!(r.bounds[Joint::Hip.index()], 5.0, epsilon = 1e-12);
        assert!(!r.feasible);
    }

    #[test]
    fn mid_range_posture_is_feasible() {
        let m = model();
        let p = Posture::new([10.0, 20.0, 20.0, -30.0, -30.0]);
        let spec = OptimizationSpec::for_initial(&m, &p, 0.1);
        let r = evaluate_constraints(&m, &p, &LoadSpec::new(4.0).unwrap(), &spec);
        assert!(r.feasible, "{r:?}");
        assert!(r.task < 0.0 && r.stability < 0.0);
        assert!(r.bounds.iter().all(|&b| b < 0.0));
    }

    #[test]
    fn forward_lean_breaks_stability() {
        let m = model();
        let p = Posture::new([20.0, 0.0, 90.0, -90.0, 0.0]);
        let load = LoadSpec::new(4.0).unwrap();
        let spec = OptimizationSpec::for_initial(&m, &p, 0.1);
        let r = evaluate_constraints(&m, &p, &load, &spec);
        let cop = simulate_plate(&m, &p, &load).cop_x;
        assert!(cop > m.foot().toe_offset);
        assert_abs_diff_eq!(r.stability, cop - m.foot().toe_offset, epsilon = 1e-12);
    }

    #[test]
    fn zero_load_returns_initial() {
        let m = model();
        let p = bent();
        let spec = OptimizationSpec::for_initial(&m, &p, 0.1);
        let (q, rep) = optimize_posture(&m, &p, &LoadSpec::none(), &spec).unwrap();
        assert_eq!(q, p);
        assert_eq!(rep.objective_final, 0.0);
    }

    #[test]
    fn infeasible_task_reports_error() {
        let m = model();
        let p = bent();
        let mut spec = OptimizationSpec::for_initial(&m, &p, 0.0);
        spec.task.z_ref = 5.0;
        spec.solver.restarts = 2;
        spec.solver.max_iters = 200;
        let err = optimize_posture(&m, &p, &LoadSpec::new(4.0).unwrap(), &spec).unwrap_err();
        assert!(matches!(err, Error::Infeasible { restarts: 3, .. }));
    }

    #[test]
    fn invalid_weights_rejected() {
        let m = model();
        let mut spec = OptimizationSpec::for_initial(&m, &bent(), 0.1);
        spec.weights = [0.0; 5];
        assert!(matches!(spec.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn grid_empty_when_task_unreachable() {
        let m = model();
        let mut spec = OptimizationSpec::for_initial(&m, &bent(), 0.0);
        spec.task.z_ref = 5.0;
        spec.free = upper_body_only();
        let g = grid_oracle(&m, &bent(), &LoadSpec::new(4.0).unwrap(), &spec, 15.0).unwrap();
        assert!(g.is_none());
    }

    #[test]
    fn grid_zero_load_finds_zero() {
        let m = model();
        let mut spec = OptimizationSpec::for_initial(&m, &bent(), 0.1);
        spec.free = upper_body_only();
        let g = grid_oracle(&m, &bent(), &LoadSpec::none(), &spec, 15.0)
            .unwrap()
            .unwrap();
        assert_eq!(g.objective, 0.0);
        assert_eq!(g.evaluated, 8 * 15 * 10);
    }

    #[test]
    fn grid_too_fine_rejected() {
        let m = model();
        let spec = OptimizationSpec::for_initial(&m, &bent(), 0.1);
        assert!(grid_oracle(&m, &bent(), &LoadSpec::none(), &spec, 0.5).is_err());
    }
}
