//! One proximal step.
//!
//! The step from `x^k` minimizes the Tchebycheff scalarization
//!
//! ```text
//! Φ(y) = max_j max_{i ∈ I_j} (f_ij(y) − f_j(x^k)) / e_j + (λ/2)‖y − x^k‖²
//! ```
//!
//! `Φ(x^k) = 0`, so any point with `Φ ≤ 0` satisfies `F(y) ⪯ F(x^k)` and the
//! sublevel constraint never has to be enforced explicitly. When
//! `λ e_j > max_i L_ij` for every `j`, each piece of `Φ` is strongly convex
//! and the minimizer is unique. Scalarization weights `z` are read off the
//! hull weights of the final stationarity certificate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::expr::EvalError;
use crate::hull::{min_norm_point, HullError, MinNormResult};
use crate::linalg::{axpy, dist, norm};
use crate::problem::{ActiveTol, Problem};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SubproblemError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Hull(#[from] HullError),
    #[error("lambda must be positive and finite, got {0}")]
    BadLambda(f64),
    #[error("weight vector e must have {expected} positive entries and unit norm, got {got:?}")]
    BadWeights { expected: usize, got: Vec<f64> },
    #[error(
        "lambda * e_{component} = {scaled} does not exceed max Lipschitz constant {lipschitz}"
    )]
    BelowThreshold {
        component: usize,
        scaled: f64,
        lipschitz: f64,
    },
}

/// Data of one proximal subproblem.
#[derive(Debug, Clone)]
pub struct ProxInstance<'a> {
    problem: &'a Problem,
    center: Vec<f64>,
    lambda: f64,
    weights_e: Vec<f64>,
    center_values: Vec<f64>,
}

/// Identifies piece `piece` of component `component`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PieceTag {
    pub component: usize,
    pub piece: usize,
}

/// `Φ(y)` together with the gradients of its active smooth pieces.
#[derive(Debug, Clone)]
pub struct ScalarizedEval {
    pub value: f64,
    pub generators: Vec<Vec<f64>>,
    pub tags: Vec<PieceTag>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub active: ActiveTol,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// Largest active band the stall recovery may widen to.
    pub active_cap: f64,
}

impl Default for InnerOptions {
    fn default() -> Self {
        InnerOptions {
            tol: 1e-9,
            max_iter: 10_000,
            active: ActiveTol::default(),
            armijo: 1e-4,
            active_cap: 1e-2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProxStepResult {
    pub next: Vec<f64>,
    /// Scalarization weights, nonnegative with unit Euclidean norm.
    pub weights_z: Vec<f64>,
    pub inner_iterations: usize,
    /// Norm of the min-norm point of the active generators of `Φ` at `next`.
    pub final_stationarity: f64,
    /// `F(x^k) − F(next)`.
    pub objective_gap_vector: Vec<f64>,
    /// `Φ(next)`.
    pub value: f64,
    pub converged: bool,
    /// `Φ` at the start and after every accepted step.
    pub phi_history: Vec<f64>,
}

impl<'a> ProxInstance<'a> {
    /// Validates `‖e‖ = 1`, `e > 0`, and the strong-convexity threshold
    /// `λ e_j > max_i L_ij`.
    pub fn new(
        problem: &'a Problem,
        center: Vec<f64>,
        lambda: f64,
        weights_e: Vec<f64>,
    ) -> Result<Self, SubproblemError> {
        let inst = Self::new_unchecked(problem, center, lambda, weights_e)?;
        for (j, e) in inst.weights_e.iter().enumerate() {
            let lipschitz = problem.max_lipschitz(j);
            if inst.lambda * e <= lipschitz {
                return Err(SubproblemError::BelowThreshold {
                    component: j + 1,
                    scaled: inst.lambda * e,
                    lipschitz,
                });
            }
        }
        Ok(inst)
    }

    /// Same as [`ProxInstance::new`] without the strong-convexity threshold.
    pub fn new_unchecked(
        problem: &'a Problem,
        center: Vec<f64>,
        lambda: f64,
        weights_e: Vec<f64>,
    ) -> Result<Self, SubproblemError> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(SubproblemError::BadLambda(lambda));
        }
        let m = problem.num_objectives();
        if weights_e.len() != m
            || weights_e.iter().any(|&e| e <= 0.0 || e.is_nan())
            || (norm(&weights_e) - 1.0).abs() > 1e-12
        {
            return Err(SubproblemError::BadWeights {
                expected: m,
                got: weights_e,
            });
        }
        let center_values = problem.evaluate(&center)?;
        Ok(ProxInstance {
            problem,
            center,
            lambda,
            weights_e,
            center_values,
        })
    }

    pub fn problem(&self) -> &Problem {
        self.problem
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn weights_e(&self) -> &[f64] {
        &self.weights_e
    }

    pub fn center_values(&self) -> &[f64] {
        &self.center_values
    }

    /// Lower bound `min_j (λ e_j − max_i L_ij)` on the strong-convexity
    /// modulus of `Φ`; negative when the threshold is violated.
    pub fn modulus(&self) -> f64 {
        self.weights_e
            .iter()
            .enumerate()
            .map(|(j, e)| self.lambda * e - self.problem.max_lipschitz(j))
            .fold(f64::INFINITY, f64::min)
    }

    fn prox_term(&self, y: &[f64]) -> f64 {
        let d = dist(y, &self.center);
        0.5 * self.lambda * d * d
    }

    pub fn value(&self, y: &[f64]) -> Result<f64, EvalError> {
        let mut worst = f64::NEG_INFINITY;
        for j in 0..self.problem.num_objectives() {
            for v in self.problem.piece_values(j, y)? {
                worst = worst.max((v - self.center_values[j]) / self.weights_e[j]);
            }
        }
        Ok(worst + self.prox_term(y))
    }

    /// `Φ(y)` and the generators `grad f_ij(y)/e_j + λ(y − x^k)` of the
    /// pieces within the active band of the maximum.
    pub fn scalarized_value_and_generators(
        &self,
        y: &[f64],
        tol: ActiveTol,
    ) -> Result<ScalarizedEval, EvalError> {
        if !self.problem.domain.contains(y) {
            return Err(EvalError::OutsideDomain { point: y.to_vec() });
        }
        let mut scaled = Vec::new();
        for (j, c) in self.problem.components.iter().enumerate() {
            for (i, piece) in c.pieces.iter().enumerate() {
                let d = piece.expr.eval_grad(y)?;
                let s = (d.value - self.center_values[j]) / self.weights_e[j];
                scaled.push((
                    PieceTag {
                        component: j,
                        piece: i,
                    },
                    s,
                    d.partials,
                ));
            }
        }
        let top = scaled
            .iter()
            .map(|(_, s, _)| *s)
            .fold(f64::NEG_INFINITY, f64::max);
        let band = tol.band(top);
        let shift: Vec<f64> = y
            .iter()
            .zip(&self.center)
            .map(|(a, b)| self.lambda * (a - b))
            .collect();
        let mut generators = Vec::new();
        let mut tags = Vec::new();
        for (tag, s, grad) in scaled {
            if s >= top - band {
                let mut g = shift.clone();
                axpy(1.0 / self.weights_e[tag.component], &grad, &mut g);
                generators.push(g);
                tags.push(tag);
            }
        }
        Ok(ScalarizedEval {
            value: top + self.prox_term(y),
            generators,
            tags,
        })
    }

    /// Recovers `z` from hull weights over tagged generators:
    /// `z_j ∝ (Σ_i α_ij) / e_j`, normalized to unit Euclidean norm.
    pub fn recover_weights(&self, tags: &[PieceTag], alpha: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.weights_e.len()];
        for (tag, a) in tags.iter().zip(alpha) {
            z[tag.component] += a / self.weights_e[tag.component];
        }
        let len = norm(&z);
        if len > 0.0 {
            z.iter_mut().for_each(|v| *v /= len);
        }
        z
    }

    fn noise_floor(&self, phi: f64) -> f64 {
        let level = self
            .center_values
            .iter()
            .zip(&self.weights_e)
            .map(|(f, e)| f.abs() / e)
            .fold(0.0, f64::max);
        16.0 * f64::EPSILON * (1.0 + level + phi.abs())
    }
}

fn widen(tol: ActiveTol, cap: f64) -> ActiveTol {
    match tol {
        ActiveTol::Scaled(s) => ActiveTol::Scaled((10.0 * s).max(1e-12).min(cap)),
        ActiveTol::Absolute(a) => ActiveTol::Absolute((10.0 * a).max(1e-12).min(cap)),
    }
}

fn shrink(tol: ActiveTol, base: ActiveTol) -> ActiveTol {
    match (tol, base) {
        (ActiveTol::Scaled(s), ActiveTol::Scaled(b)) => ActiveTol::Scaled((s / 10.0).max(b)),
        (ActiveTol::Absolute(a), ActiveTol::Absolute(b)) => ActiveTol::Absolute((a / 10.0).max(b)),
        _ => base,
    }
}

/// Minimizes `Φ` starting from the center.
pub fn solve_inner(
    inst: &ProxInstance<'_>,
    opts: &InnerOptions,
) -> Result<ProxStepResult, SubproblemError> {
    solve_inner_from(inst, inst.center.clone(), opts)
}

/// ε-active steepest descent on `Φ` from an arbitrary start.
///
/// Direction: minus the min-norm point of the active generators. Step:
/// Armijo backtracking by halving. Once the required decrease falls below
/// the rounding level of `Φ`, a trial is accepted instead if it stays within
/// that level and strictly reduces the stationarity measure. A stalled line search widens
/// the active band tenfold up to `active_cap`; a widened band that already
/// certifies stationarity is narrowed again before termination is declared.
pub fn solve_inner_from(
    inst: &ProxInstance<'_>,
    start: Vec<f64>,
    opts: &InnerOptions,
) -> Result<ProxStepResult, SubproblemError> {
    let base = opts.active;
    let mut tol = base;
    let mut y = start;
    let mut eval = inst.scalarized_value_and_generators(&y, tol)?;
    let mut phi_history = vec![eval.value];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        let mn = min_norm_point(&eval.generators)?;
        if mn.norm <= opts.tol {
            if tol == base {
                converged = true;
                break;
            }
            tol = shrink(tol, base);
            eval = inst.scalarized_value_and_generators(&y, tol)?;
            iterations += 1;
            continue;
        }
        iterations += 1;
        match line_search(inst, &y, &eval, &mn, tol, opts) {
            Some((trial, trial_eval)) => {
                y = trial;
                eval = trial_eval;
                phi_history.push(eval.value);
            }
            None => {
                let wider = widen(tol, opts.active_cap);
                if wider == tol {
                    break;
                }
                tol = wider;
                eval = inst.scalarized_value_and_generators(&y, tol)?;
            }
        }
    }

    let fin = inst.scalarized_value_and_generators(&y, base)?;
    let mn = min_norm_point(&fin.generators)?;
    let weights_z = inst.recover_weights(&fin.tags, &mn.weights);
    let values = inst.problem.evaluate(&y)?;
    let objective_gap_vector = inst
        .center_values
        .iter()
        .zip(&values)
        .map(|(a, b)| a - b)
        .collect();
    Ok(ProxStepResult {
        next: y,
        weights_z,
        inner_iterations: iterations,
        final_stationarity: mn.norm,
        objective_gap_vector,
        value: fin.value,
        converged: converged && mn.norm <= opts.tol,
        phi_history,
    })
}

fn line_search(
    inst: &ProxInstance<'_>,
    y: &[f64],
    eval: &ScalarizedEval,
    mn: &MinNormResult,
    tol: ActiveTol,
    opts: &InnerOptions,
) -> Option<(Vec<f64>, ScalarizedEval)> {
    const MAX_HALVINGS: usize = 60;
    let dd = mn.norm * mn.norm;
    let noise = inst.noise_floor(eval.value);
    let mut t = 1.0;
    for _ in 0..MAX_HALVINGS {
        let mut trial = y.to_vec();
        axpy(-t, &mn.point, &mut trial);
        if inst.problem.domain.contains(&trial) && trial != y {
            if let Ok(v) = inst.value(&trial) {
                let decrease = opts.armijo * t * dd;
                if decrease > noise {
                    if v <= eval.value - decrease {
                        let trial_eval = inst.scalarized_value_and_generators(&trial, tol).ok()?;
                        return Some((trial, trial_eval));
                    }
                } else if v <= eval.value + noise {
                    let trial_eval = inst.scalarized_value_and_generators(&trial, tol).ok()?;
                    let stationarity = min_norm_point(&trial_eval.generators).ok()?.norm;
                    if stationarity < mn.norm {
                        return Some((trial, trial_eval));
                    }
                }
            }
        }
        t *= 0.5;
    }
    None
}

/// Outcome of sampling the strong-convexity secant inequality of `Φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityProbe {
    pub trials: usize,
    pub violations: usize,
    /// Largest observed excess of the left side over the right side.
    pub worst_excess: f64,
    pub modulus: f64,
}

impl ConvexityProbe {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Samples `x, y` in the working region and `t ∈ (0, 1)` and checks
/// `Φ((1−t)x + ty) ≤ (1−t)Φ(x) + tΦ(y) − (ν/2) t(1−t)‖x−y‖²` with
/// `ν = max(0, min_j(λ e_j − max_i L_ij))`, allowing 1e-8 slack.
pub fn strong_convexity_probe(inst: &ProxInstance<'_>, trials: usize, seed: u64) -> ConvexityProbe {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let region = &inst.problem.sampling_box();
    let nu = inst.modulus().max(0.0);
    let mut violations = 0;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut done = 0;
    while done < trials {
        let x = region.sample(&mut rng);
        let y = region.sample(&mut rng);
        let t: f64 = rng.gen_range(0.0..1.0);
        let mid: Vec<f64> = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (1.0 - t) * a + t * b)
            .collect();
        let (Ok(fx), Ok(fy), Ok(fm)) = (inst.value(&x), inst.value(&y), inst.value(&mid)) else {
            done += 1;
            continue;
        };
        let d = dist(&x, &y);
        let rhs = (1.0 - t) * fx + t * fy - 0.5 * nu * t * (1.0 - t) * d * d;
        let excess = fm - rhs;
        worst_excess = worst_excess.max(excess);
        if excess > 1e-8 {
            violations += 1;
        }
        done += 1;
    }
    ConvexityProbe {
        trials,
        violations,
        worst_excess,
        modulus: inst.modulus(),
    }
}
