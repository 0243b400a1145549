//! Minimum-norm point of the convex hull of finitely many vectors.
//!
//! [`min_norm_point`] is Wolfe's active-set method: keep a corral of
//! affinely independent generators, move to the affine minimizer of the
//! corral when it lies inside the simplex, otherwise step back to the
//! simplex boundary and drop the generators whose weight hit zero. It stops
//! once `⟨x, g⟩ ≥ ‖x‖² − tol` holds for every generator `g`, which is the
//! optimality condition for projecting the origin onto the hull.

use thiserror::Error;

use crate::linalg::{axpy, dot, norm};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HullError {
    #[error("no generators")]
    Empty,
    #[error("generator {index} has dimension {got}, expected {expected}")]
    Dimension {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("generators must have dimension at least 1")]
    ZeroDimension,
    #[error("generator {index} has a non-finite entry")]
    NonFinite { index: usize },
    #[error("{count} generators exceed the brute-force limit of {limit}")]
    TooManyGenerators { count: usize, limit: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinNormResult {
    pub point: Vec<f64>,
    /// One weight per input generator, nonnegative, summing to 1.
    pub weights: Vec<f64>,
    pub norm: f64,
}

/// Relative tolerance on the optimality gap `‖x‖² − min_g ⟨x, g⟩`.
const CERTIFICATE_TOL: f64 = 1e-10;
/// Generators closer than this (max-norm) are merged before solving.
const DUPLICATE_TOL: f64 = 1e-14;
const WEIGHT_FLOOR: f64 = 1e-15;

fn validate(generators: &[Vec<f64>]) -> Result<usize, HullError> {
    let first = generators.first().ok_or(HullError::Empty)?;
    let n = first.len();
    if n == 0 {
        return Err(HullError::ZeroDimension);
    }
    for (index, g) in generators.iter().enumerate() {
        if g.len() != n {
            return Err(HullError::Dimension {
                index,
                expected: n,
                got: g.len(),
            });
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(HullError::NonFinite { index });
        }
    }
    Ok(n)
}

/// Nearest point to the origin in `conv(generators)` with supporting weights.
///
/// Deterministic for a fixed input order; ties are broken toward the lowest
/// generator index.
pub fn min_norm_point(generators: &[Vec<f64>]) -> Result<MinNormResult, HullError> {
    let n = validate(generators)?;

    // representatives[r] is the input index of the r-th distinct generator
    let mut representatives: Vec<usize> = Vec::new();
    for (i, g) in generators.iter().enumerate() {
        let duplicate = representatives.iter().any(|&r| {
            generators[r]
                .iter()
                .zip(g)
                .all(|(a, b)| (a - b).abs() <= DUPLICATE_TOL)
        });
        if !duplicate {
            representatives.push(i);
        }
    }
    let pts: Vec<&[f64]> = representatives
        .iter()
        .map(|&r| generators[r].as_slice())
        .collect();
    let scale = pts.iter().map(|p| dot(p, p)).fold(0.0, f64::max);

    let mut corral = vec![argmin_by(&pts, |p| dot(p, p))];
    let mut weights = vec![1.0];
    let mut x = pts[corral[0]].to_vec();

    let max_major = 100 + 20 * (pts.len() + n);
    for _ in 0..max_major {
        let xx = dot(&x, &x);
        if xx == 0.0 {
            break;
        }
        let j = argmin_by(&pts, |p| dot(&x, p));
        if xx - dot(&x, pts[j]) <= CERTIFICATE_TOL * scale || corral.contains(&j) {
            break;
        }
        corral.push(j);
        weights.push(0.0);

        let mut stuck = false;
        loop {
            let Some(v) = affine_minimizer(&pts, &corral) else {
                // the new generator is affinely dependent on the corral
                corral.pop();
                weights.pop();
                stuck = true;
                break;
            };
            if v.iter().all(|&vi| vi > WEIGHT_FLOOR) {
                weights = v;
                break;
            }
            let mut theta = 1.0_f64;
            let mut leaving = 0;
            for (i, (&wi, &vi)) in weights.iter().zip(&v).enumerate() {
                if vi <= WEIGHT_FLOOR {
                    let t = if wi - vi > 0.0 { wi / (wi - vi) } else { 0.0 };
                    if t < theta {
                        theta = t;
                        leaving = i;
                    }
                }
            }
            let theta = theta.clamp(0.0, 1.0);
            for (wi, vi) in weights.iter_mut().zip(&v) {
                *wi = (1.0 - theta) * *wi + theta * vi;
            }
            weights[leaving] = 0.0;
            let mut k = 0;
            while k < corral.len() {
                if weights[k] <= WEIGHT_FLOOR {
                    corral.remove(k);
                    weights.remove(k);
                } else {
                    k += 1;
                }
            }
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
        }
        let next = combine(&pts, &corral, &weights, n);
        let improved = dot(&next, &next) < xx;
        x = next;
        if stuck || !improved {
            break;
        }
    }

    let mut out = vec![0.0; generators.len()];
    for (&c, &w) in corral.iter().zip(&weights) {
        out[representatives[c]] += w.max(0.0);
    }
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|w| *w /= total);
    let mut point = vec![0.0; n];
    for (g, &w) in generators.iter().zip(&out) {
        if w > 0.0 {
            axpy(w, g, &mut point);
        }
    }
    let norm = norm(&point);
    Ok(MinNormResult {
        point,
        weights: out,
        norm,
    })
}

fn argmin_by(pts: &[&[f64]], key: impl Fn(&[f64]) -> f64) -> usize {
    let mut best = 0;
    let mut best_val = key(pts[0]);
    for (i, p) in pts.iter().enumerate().skip(1) {
        let v = key(p);
        if v < best_val {
            best = i;
            best_val = v;
        }
    }
    best
}

fn combine(pts: &[&[f64]], corral: &[usize], weights: &[f64], n: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for (&c, &w) in corral.iter().zip(weights) {
        axpy(w, pts[c], &mut x);
    }
    x
}

/// Weights `v` (summing to 1) minimizing `‖Σ v_i p_i‖` over the affine hull
/// of the corral, by least squares on the differences `p_i − p_0` with
/// modified Gram–Schmidt. `None` if the corral is affinely dependent.
fn affine_minimizer(pts: &[&[f64]], corral: &[usize]) -> Option<Vec<f64>> {
    let base = pts[corral[0]];
    let r = corral.len() - 1;
    if r == 0 {
        return Some(vec![1.0]);
    }
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(r);
    let mut rmat = vec![vec![0.0; r]; r];
    for (col, &c) in corral[1..].iter().enumerate() {
        let mut d: Vec<f64> = pts[c].iter().zip(base).map(|(a, b)| a - b).collect();
        let original = norm(&d);
        if original == 0.0 {
            return None;
        }
        // two passes of orthogonalization
        for _ in 0..2 {
            for (k, qk) in q.iter().enumerate() {
                let proj = dot(qk, &d);
                rmat[k][col] += proj;
                axpy(-proj, qk, &mut d);
            }
        }
        let len = norm(&d);
        if len <= 1e-12 * original {
            return None;
        }
        rmat[col][col] = len;
        d.iter_mut().for_each(|v| *v /= len);
        q.push(d);
    }
    // R u = −Qᵀ base
    let rhs: Vec<f64> = q.iter().map(|qk| -dot(qk, base)).collect();
    let mut u = vec![0.0; r];
    for row in (0..r).rev() {
        let tail: f64 = ((row + 1)..r).map(|k| rmat[row][k] * u[k]).sum();
        u[row] = (rhs[row] - tail) / rmat[row][row];
    }
    let mut v = Vec::with_capacity(r + 1);
    v.push(1.0 - u.iter().sum::<f64>());
    v.extend(u);
    Some(v)
}

/// Grid oracle: minimizes `‖Σ w_i g_i‖` over the weight simplex discretized
/// with `grid_steps` subdivisions per axis. The last two weights are handled
/// by exact minimization of a one-dimensional quadratic over the grid line,
/// which yields the same grid minimizer as full enumeration.
pub fn brute_force_min_norm(
    generators: &[Vec<f64>],
    grid_steps: usize,
) -> Result<Vec<f64>, HullError> {
    const LIMIT: usize = 4;
    let n = validate(generators)?;
    let k = generators.len();
    if k > LIMIT {
        return Err(HullError::TooManyGenerators {
            count: k,
            limit: LIMIT,
        });
    }
    if k == 1 || grid_steps == 0 {
        return Ok(generators[0].clone());
    }
    let steps = grid_steps as f64;
    let (head, tail) = generators.split_at(k - 2);
    let (ga, gb) = (&tail[0], &tail[1]);
    let delta: Vec<f64> = ga.iter().zip(gb).map(|(a, b)| (a - b) / steps).collect();
    let dd = dot(&delta, &delta);

    let mut best = f64::INFINITY;
    let mut best_point = generators[0].clone();
    let mut counts = vec![0usize; head.len()];
    loop {
        let used: usize = counts.iter().sum();
        if used <= grid_steps {
            let rest = grid_steps - used;
            let mut c = vec![0.0; n];
            for (g, &cnt) in head.iter().zip(&counts) {
                axpy(cnt as f64 / steps, g, &mut c);
            }
            axpy(rest as f64 / steps, gb, &mut c);
            let candidates = if dd > 0.0 {
                let a = (-dot(&c, &delta) / dd).clamp(0.0, rest as f64);
                [a.floor(), a.ceil()]
            } else {
                [0.0, 0.0]
            };
            for a in candidates {
                let mut p = c.clone();
                axpy(a, &delta, &mut p);
                let val = dot(&p, &p);
                if val < best {
                    best = val;
                    best_point = p;
                }
            }
        }
        // odometer over the head weights
        let mut pos = 0;
        loop {
            if pos == counts.len() {
                return Ok(best_point);
            }
            counts[pos] += 1;
            if counts.iter().sum::<usize>() <= grid_steps {
                break;
            }
            counts[pos] = 0;
            pos += 1;
        }
    }
}
