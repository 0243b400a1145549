//! Outer proximal iteration.
//!
//! Starting from `x^0 ∈ S_F(F(ȳ))`, every step solves the subproblem of
//! [`crate::subproblem`] at the current iterate with parameters `(λ_k, e^k)`
//! drawn from the configured schedules, which must satisfy
//!
//! ```text
//! ‖e^k‖ = 1,   μ̄ < e^k_j,   (1/μ̄) max_i L_ij < λ_k ≤ λ̄     for every j, k.
//! ```
//!
//! Iteration stops when `‖x^{k+1} − x^k‖ ≤ tol_outer`.

use thiserror::Error;

use crate::criticality::{self, CriticalityError};
use crate::expr::EvalError;
use crate::linalg::{dist, norm};
use crate::problem::{weakly_below, ActiveTol, Problem};
use crate::subproblem::{solve_inner, InnerOptions, ProxInstance, SubproblemError};

/// Per-iteration parameter rule. A sequence shorter than the run repeats
/// its last entry.
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule<T> {
    Constant(T),
    Sequence(Vec<T>),
}

impl<T> Schedule<T> {
    pub fn at(&self, k: usize) -> &T {
        match self {
            Schedule::Constant(v) => v,
            Schedule::Sequence(vs) => &vs[k.min(vs.len() - 1)],
        }
    }

    fn entries(&self) -> &[T] {
        match self {
            Schedule::Constant(v) => std::slice::from_ref(v),
            Schedule::Sequence(vs) => vs,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub mu_bar: f64,
    pub lambda_bar: f64,
    pub lambda: Schedule<f64>,
    pub weights_e: Schedule<Vec<f64>>,
    pub tol_outer: f64,
    pub max_outer: usize,
    pub tol_inner: f64,
    pub max_inner: usize,
    pub active: ActiveTol,
    /// Accept λ at or below the `(1/μ̄) max L` threshold.
    pub override_lambda_check: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("mu_bar must lie in (0, 1), got {0}")]
    MuBar(f64),
    #[error("lambda_bar must be positive and finite, got {0}")]
    LambdaBar(f64),
    #[error("schedule sequence is empty")]
    EmptySchedule,
    #[error("lambda_{k} = {lambda} outside ({lower}, {upper}]")]
    LambdaOutOfRange {
        k: usize,
        lambda: f64,
        lower: f64,
        upper: f64,
    },
    #[error("e^{k} has {got} entries, expected {expected}")]
    WeightsLength {
        k: usize,
        expected: usize,
        got: usize,
    },
    #[error("e^{k} has norm {norm}, expected 1")]
    WeightsNorm { k: usize, norm: f64 },
    #[error("e^{k}_{j} = {value} does not exceed mu_bar = {mu_bar}")]
    WeightBelowMuBar {
        k: usize,
        j: usize,
        value: f64,
        mu_bar: f64,
    },
    #[error("tolerances must be positive and iteration limits nonzero")]
    Limits,
}

/// Feasible default parameters: `μ̄ = 0.9/√m`, `e ≡ (1/√m, …)`,
/// `λ ≡ 1.01 max L / μ̄`, `λ̄ = 10λ`.
pub fn default_config(p: &Problem) -> SolverConfig {
    let m = p.num_objectives() as f64;
    let mu_bar = 0.9 / m.sqrt();
    let lambda = 1.01 * p.max_lipschitz_overall() / mu_bar;
    let tol_outer = 1e-8;
    SolverConfig {
        mu_bar,
        lambda_bar: 10.0 * lambda,
        lambda: Schedule::Constant(lambda),
        weights_e: Schedule::Constant(vec![1.0 / m.sqrt(); p.num_objectives()]),
        tol_outer,
        max_outer: 1000,
        tol_inner: inner_tolerance(tol_outer),
        max_inner: 10_000,
        active: ActiveTol::default(),
        override_lambda_check: false,
    }
}

/// `min(1e-8, tol_outer / 10)`.
pub fn inner_tolerance(tol_outer: f64) -> f64 {
    (tol_outer / 10.0).min(1e-8)
}

impl SolverConfig {
    /// Smallest λ admitted for `p`: `(1/μ̄) max_j max_i L_ij`.
    pub fn lambda_threshold(&self, p: &Problem) -> f64 {
        p.max_lipschitz_overall() / self.mu_bar
    }

    pub fn validate(&self, p: &Problem) -> Result<(), ConfigError> {
        if !(self.mu_bar > 0.0 && self.mu_bar < 1.0) {
            return Err(ConfigError::MuBar(self.mu_bar));
        }
        if !(self.lambda_bar > 0.0 && self.lambda_bar.is_finite()) {
            return Err(ConfigError::LambdaBar(self.lambda_bar));
        }
        if !(self.tol_outer > 0.0 && self.tol_inner > 0.0)
            || self.max_outer == 0
            || self.max_inner == 0
        {
            return Err(ConfigError::Limits);
        }
        if self.lambda.entries().is_empty() || self.weights_e.entries().is_empty() {
            return Err(ConfigError::EmptySchedule);
        }
        for k in 0..self.lambda.entries().len() {
            self.check_lambda(p, k, self.lambda.entries()[k])?;
        }
        for (k, e) in self.weights_e.entries().iter().enumerate() {
            self.check_weights(p, k, e)?;
        }
        Ok(())
    }

    fn check_lambda(&self, p: &Problem, k: usize, lambda: f64) -> Result<(), ConfigError> {
        let lower = if self.override_lambda_check {
            0.0
        } else {
            self.lambda_threshold(p)
        };
        if !(lambda > lower && lambda <= self.lambda_bar) {
            return Err(ConfigError::LambdaOutOfRange {
                k,
                lambda,
                lower,
                upper: self.lambda_bar,
            });
        }
        Ok(())
    }

    fn check_weights(&self, p: &Problem, k: usize, e: &[f64]) -> Result<(), ConfigError> {
        let m = p.num_objectives();
        if e.len() != m {
            return Err(ConfigError::WeightsLength {
                k,
                expected: m,
                got: e.len(),
            });
        }
        let len = norm(e);
        if (len - 1.0).abs() > 1e-12 {
            return Err(ConfigError::WeightsNorm { k, norm: len });
        }
        if let Some((j, &value)) = e
            .iter()
            .enumerate()
            .find(|(_, &v)| v <= self.mu_bar || v.is_nan())
        {
            return Err(ConfigError::WeightBelowMuBar {
                k,
                j: j + 1,
                value,
                mu_bar: self.mu_bar,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub k: usize,
    pub x: Vec<f64>,
    pub f_of_x: Vec<f64>,
    /// Parameters and outcome of the step that produced `x`; absent on the
    /// initial record.
    pub lambda: Option<f64>,
    pub e: Option<Vec<f64>>,
    pub z: Option<Vec<f64>>,
    pub step_norm: Option<f64>,
    pub inner_iterations: Option<usize>,
    pub stationarity: Option<f64>,
    pub criticality_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Converged,
    MaxIterations,
    /// The inner solver stopped short of its tolerance while computing
    /// record `iteration`; the trace ends with its best point.
    InnerFailure {
        iteration: usize,
        stationarity: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub records: Vec<IterateRecord>,
    pub status: Status,
    pub final_point: Vec<f64>,
}

/// Slack for monotonicity comparisons of objective vectors.
pub const MONOTONE_SLACK: f64 = 1e-10;

impl Trace {
    pub fn last(&self) -> &IterateRecord {
        self.records.last().expect("trace has at least one record")
    }

    pub fn iterations(&self) -> usize {
        self.records.len() - 1
    }

    /// First `k` with `F(x^k) ⪯ c·1`.
    pub fn sublevel_entry(&self, c: f64) -> Option<usize> {
        self.records
            .iter()
            .position(|r| r.f_of_x.iter().all(|&f| f <= c))
    }

    /// Count of `(k, j)` with `F_j(x^{k+1}) > F_j(x^k) + 1e-10`.
    pub fn monotone_violations(&self) -> usize {
        self.records
            .windows(2)
            .map(|w| {
                w[1].f_of_x
                    .iter()
                    .zip(&w[0].f_of_x)
                    .filter(|(next, prev)| **next > **prev + MONOTONE_SLACK)
                    .count()
            })
            .sum()
    }

    /// Records whose `F(x^k)` is not below `bound + slack` componentwise.
    pub fn confinement_violations(&self, bound: &[f64], slack: f64) -> usize {
        let raised: Vec<f64> = bound.iter().map(|b| b + slack).collect();
        self.records
            .iter()
            .filter(|r| !weakly_below(&r.f_of_x, &raised))
            .count()
    }

    pub fn sum_squared_steps(&self) -> f64 {
        self.records
            .iter()
            .filter_map(|r| r.step_norm)
            .map(|s| s * s)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("invalid solver configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("starting point {x0:?} is not in S_F(F(reference_point)): F(x0) = {f_x0:?}, bound {bound:?}")]
    Infeasible {
        x0: Vec<f64>,
        f_x0: Vec<f64>,
        bound: Vec<f64>,
    },
    #[error("starting point: {0}")]
    Eval(#[from] EvalError),
    #[error("iteration {iteration}: {source}")]
    Subproblem {
        iteration: usize,
        source: SubproblemError,
    },
    #[error("iteration {iteration}: {source}")]
    Criticality {
        iteration: usize,
        source: CriticalityError,
    },
}

/// Runs the proximal iteration from `x0`.
pub fn solve(p: &Problem, x0: &[f64], cfg: &SolverConfig) -> Result<Trace, SolveError> {
    cfg.validate(p)?;
    let bound = p.evaluate(&p.reference_point)?;
    let f0 = p.evaluate(x0)?;
    if !weakly_below(&f0, &bound) {
        return Err(SolveError::Infeasible {
            x0: x0.to_vec(),
            f_x0: f0,
            bound,
        });
    }
    let residual_at = |x: &[f64], iteration: usize| {
        criticality::residual(p, x, cfg.active)
            .map(|c| c.residual)
            .map_err(|source| SolveError::Criticality { iteration, source })
    };
    let opts = InnerOptions {
        tol: cfg.tol_inner,
        max_iter: cfg.max_inner,
        active: cfg.active,
        ..InnerOptions::default()
    };

    let mut records = vec![IterateRecord {
        k: 0,
        x: x0.to_vec(),
        f_of_x: f0,
        lambda: None,
        e: None,
        z: None,
        step_norm: None,
        inner_iterations: None,
        stationarity: None,
        criticality_residual: residual_at(x0, 0)?,
    }];
    let mut x = x0.to_vec();
    let mut status = Status::MaxIterations;

    for k in 0..cfg.max_outer {
        let lambda = *cfg.lambda.at(k);
        let e = cfg.weights_e.at(k).clone();
        let iteration = k + 1;
        let wrap = |source| SolveError::Subproblem { iteration, source };
        let inst = if cfg.override_lambda_check {
            ProxInstance::new_unchecked(p, x.clone(), lambda, e.clone())
        } else {
            ProxInstance::new(p, x.clone(), lambda, e.clone())
        }
        .map_err(wrap)?;
        let step = solve_inner(&inst, &opts).map_err(wrap)?;
        let step_norm = dist(&step.next, &x);
        let f_next = p
            .evaluate(&step.next)
            .map_err(|e| wrap(SubproblemError::Eval(e)))?;
        records.push(IterateRecord {
            k: iteration,
            x: step.next.clone(),
            f_of_x: f_next,
            lambda: Some(lambda),
            e: Some(e),
            z: Some(step.weights_z),
            step_norm: Some(step_norm),
            inner_iterations: Some(step.inner_iterations),
            stationarity: Some(step.final_stationarity),
            criticality_residual: residual_at(&step.next, iteration)?,
        });
        x = step.next;
        if !step.converged {
            status = Status::InnerFailure {
                iteration,
                stationarity: step.final_stationarity,
            };
            break;
        }
        if step_norm <= cfg.tol_outer {
            status = Status::Converged;
            break;
        }
    }
    Ok(Trace {
        records,
        status,
        final_point: x,
    })
}

#[cfg(test)]
#[allow(clippy::approx_constant)]
mod tests {
    use super::*;
    use crate::builtin;

    #[test]
    fn default_parameters() {
        let p = builtin::example31();
        let cfg = default_config(&p);
        assert!((cfg.mu_bar - 0.63640).abs() < 1e-5);
        assert!((cfg.lambda.at(0) - 42.85).abs() < 5e-3);
        let e = cfg.weights_e.at(7);
        assert!((e[0] - 0.70711).abs() < 1e-5 && (e[1] - 0.70711).abs() < 1e-5);
        assert!(cfg.validate(&p).is_ok());
        assert_eq!(cfg.tol_inner, 1e-9);

        let single = Problem::from_json(
            r#"{"nvars":1,"domain":{"lower":["-inf"],"upper":["inf"]},"reference_point":[0],
                "components":[{"pieces":[{"expr":"x1^2","lipschitz_grad":2}]}]}"#,
        )
        .unwrap();
        let cfg = default_config(&single);
        assert!((cfg.mu_bar - 0.9).abs() < 1e-15);
        assert!((cfg.lambda.at(0) - 2.2444).abs() < 1e-4);
        assert_eq!(cfg.weights_e.at(0), &vec![1.0]);
    }

    #[test]
    fn validation_rejects() {
        let p = builtin::example31();
        let base = default_config(&p);
        let mut cfg = base.clone();
        cfg.mu_bar = 1.0;
        assert_eq!(cfg.validate(&p), Err(ConfigError::MuBar(1.0)));
        let mut cfg = base.clone();
        cfg.lambda = Schedule::Constant(0.01 * 27.0);
        assert!(matches!(
            cfg.validate(&p),
            Err(ConfigError::LambdaOutOfRange { k: 0, .. })
        ));
        cfg.override_lambda_check = true;
        assert!(cfg.validate(&p).is_ok());
        let mut cfg = base.clone();
        cfg.lambda = Schedule::Sequence(vec![43.0, 44.0, 1000.0]);
        assert!(matches!(
            cfg.validate(&p),
            Err(ConfigError::LambdaOutOfRange { k: 2, .. })
        ));
        let mut cfg = base.clone();
        cfg.weights_e = Schedule::Constant(vec![0.6, 0.8]);
        assert!(matches!(
            cfg.validate(&p),
            Err(ConfigError::WeightBelowMuBar { j: 1, .. })
        ));
        let mut cfg = base.clone();
        cfg.weights_e = Schedule::Constant(vec![0.7, 0.7]);
        assert!(matches!(
            cfg.validate(&p),
            Err(ConfigError::WeightsNorm { .. })
        ));
        let mut cfg = base;
        cfg.lambda = Schedule::Sequence(vec![]);
        assert_eq!(cfg.validate(&p), Err(ConfigError::EmptySchedule));
    }

    #[test]
    fn infeasible_start_is_rejected() {
        let p = builtin::example31();
        let cfg = default_config(&p);
        assert!(matches!(
            solve(&p, &[3.5], &cfg),
            Err(SolveError::Infeasible { .. })
        ));
        assert!(matches!(solve(&p, &[0.05], &cfg), Err(SolveError::Eval(_))));
    }

    #[test]
    fn start_at_critical_point() {
        let p = builtin::example31();
        let t = solve(&p, &[1.0], &default_config(&p)).unwrap();
        assert_eq!(t.status, Status::Converged);
        assert!(t.iterations() <= 1);
        assert!((t.final_point[0] - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn schedule_sequence_repeats_last() {
        let s = Schedule::Sequence(vec![1.0, 2.0]);
        assert_eq!(*s.at(0), 1.0);
        assert_eq!(*s.at(5), 2.0);
    }

    #[test]
    fn monitors_on_hand_built_traces() {
        let rec = |k: usize, f: [f64; 2]| IterateRecord {
            k,
            x: vec![k as f64],
            f_of_x: f.to_vec(),
            lambda: None,
            e: None,
            z: None,
            step_norm: (k > 0).then_some(0.1),
            inner_iterations: None,
            stationarity: None,
            criticality_residual: 0.0,
        };
        let single = Trace {
            records: vec![rec(0, [1.0, 1.0])],
            status: Status::Converged,
            final_point: vec![0.0],
        };
        assert_eq!(single.monotone_violations(), 0);
        assert_eq!(single.sublevel_entry(1e300), Some(0));
        let corrupted = Trace {
            records: vec![rec(0, [3.0, 3.0]), rec(1, [2.0, 3.5]), rec(2, [2.5, 3.0])],
            status: Status::Converged,
            final_point: vec![2.0],
        };
        assert_eq!(corrupted.monotone_violations(), 2);
        assert_eq!(corrupted.sublevel_entry(3.0), Some(0));
        assert_eq!(corrupted.sublevel_entry(1.0), None);
        assert_eq!(corrupted.confinement_violations(&[3.0, 3.0], 1e-10), 1);
    }
}
