//! Approximate Pareto–Clarke criticality.
//!
//! A point is Pareto–Clarke critical when no direction `d` makes every
//! Clarke directional derivative `f_j°(x, d)` negative. With `∂°f_j(x)`
//! inner-approximated by the hull of the active piece gradients, `f_j°(x, d)`
//! is bounded below by `max_g ⟨g, d⟩` over those gradients, and by min-max
//! duality the condition becomes `0 ∈ conv(∪_j active gradients of f_j)`.
//! The residual is the norm of the min-norm point of that pooled hull; when
//! it is positive, the normalized negative min-norm point is a common
//! descent direction.

use thiserror::Error;

use crate::expr::EvalError;
use crate::hull::{min_norm_point, HullError};
use crate::linalg::{axpy, dot, norm, scaled};
use crate::problem::{weakly_below, ActiveTol, Problem};
use crate::subproblem::PieceTag;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CriticalityError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Hull(#[from] HullError),
    #[error("component {component} has {pieces} pieces; the smooth-case check needs exactly one")]
    NotSmooth { component: usize, pieces: usize },
    #[error("no grid point lies in the region between the two sublevel sets ({skipped} skipped)")]
    EmptyGrid { skipped: usize },
    #[error("z grid needs at least one subdivision")]
    EmptyWeightGrid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalityCertificate {
    /// Norm of `hull_point`.
    pub residual: f64,
    pub hull_point: Vec<f64>,
    pub tags: Vec<PieceTag>,
    /// Hull weight of each tagged generator.
    pub weights: Vec<f64>,
    /// Unit common descent direction, present when the residual is positive.
    pub descent_direction: Option<Vec<f64>>,
    /// Per component, `max ⟨g, d⟩` over its active gradients; each is at
    /// most `−residual` when a direction is present.
    pub directional_upper_bounds: Option<Vec<f64>>,
}

impl CriticalityCertificate {
    pub fn is_critical(&self, tol: f64) -> bool {
        self.residual <= tol
    }
}

pub fn residual(
    p: &Problem,
    x: &[f64],
    tol: ActiveTol,
) -> Result<CriticalityCertificate, CriticalityError> {
    let gens = p.clarke_generators(x, tol)?;
    let mut tags = Vec::new();
    let mut pooled = Vec::new();
    for g in &gens {
        for (&i, grad) in g.piece_indices.iter().zip(&g.gradients) {
            tags.push(PieceTag {
                component: g.component_index,
                piece: i,
            });
            pooled.push(grad.clone());
        }
    }
    let mn = min_norm_point(&pooled)?;
    let (descent_direction, directional_upper_bounds) = if mn.norm > 0.0 {
        let d = scaled(-1.0 / mn.norm, &mn.point);
        let bounds = gens
            .iter()
            .map(|g| {
                g.gradients
                    .iter()
                    .map(|grad| dot(grad, &d))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        (Some(d), Some(bounds))
    } else {
        (None, None)
    };
    Ok(CriticalityCertificate {
        residual: mn.norm,
        hull_point: mn.point,
        tags,
        weights: mn.weights,
        descent_direction,
        directional_upper_bounds,
    })
}

pub fn is_critical(p: &Problem, x: &[f64], tol: f64) -> Result<bool, CriticalityError> {
    Ok(residual(p, x, ActiveTol::default())?.is_critical(tol))
}

/// Smooth-case test: `Im(JF(x)) ∩ (−R^m_{++}) = ∅`, decided by whether the
/// hull of the component gradients reaches the origin (to 1e-8).
pub fn smooth_case_check(p: &Problem, x: &[f64]) -> Result<bool, CriticalityError> {
    if let Some((j, c)) = p
        .components
        .iter()
        .enumerate()
        .find(|(_, c)| c.pieces.len() != 1)
    {
        return Err(CriticalityError::NotSmooth {
            component: j + 1,
            pieces: c.pieces.len(),
        });
    }
    if !p.domain.contains(x) {
        return Err(EvalError::OutsideDomain { point: x.to_vec() }.into());
    }
    let rows = p
        .components
        .iter()
        .map(|c| Ok(c.pieces[0].expr.eval_grad(x)?.partials))
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok(min_norm_point(&rows)?.norm <= 1e-8)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginScanReport {
    pub min_margin: f64,
    pub argmin_x: Vec<f64>,
    pub argmin_z: Vec<f64>,
    /// Grid points that passed the region filter.
    pub samples: usize,
    /// Grid points outside `S_F(F(ȳ)) \ S_F(c·1)`.
    pub skipped: usize,
}

/// Weights on the simplex `{z ≥ 0, Σ z = 1}` with `steps` subdivisions, in
/// lexicographic order of the integer numerators.
pub fn simplex_grid(m: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(m: usize, left: usize, steps: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if prefix.len() + 1 == m {
            prefix.push(left);
            out.push(prefix.iter().map(|&c| c as f64 / steps as f64).collect());
            prefix.pop();
            return;
        }
        for c in (0..=left).rev() {
            prefix.push(c);
            rec(m, left - c, steps, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, steps, steps, &mut Vec::new(), &mut out);
    out
}

/// Sampled lower estimate of the margin `inf ‖Σ_j z_j g_j(x)‖` over points
/// `x ∈ S_F(F(ȳ)) \ S_F(c·1)` taken from `x_grid`, weights `z` on the
/// simplex grid, and selections `g_j` among the active gradients of `f_j`.
/// Points are assumed interior, so no normal-cone term is added.
/// Ties keep the first minimizer in grid order.
pub fn h3_margin_scan(
    p: &Problem,
    c: f64,
    x_grid: &[Vec<f64>],
    z_grid_steps: usize,
) -> Result<MarginScanReport, CriticalityError> {
    if z_grid_steps == 0 {
        return Err(CriticalityError::EmptyWeightGrid);
    }
    let m = p.num_objectives();
    let upper = p.evaluate(&p.reference_point)?;
    let level = vec![c; m];
    let zs = simplex_grid(m, z_grid_steps);
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let (mut samples, mut skipped) = (0, 0);
    for x in x_grid {
        let fx = match p.evaluate(x) {
            Ok(v) => v,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        if !weakly_below(&fx, &upper) || weakly_below(&fx, &level) {
            skipped += 1;
            continue;
        }
        samples += 1;
        let gens = p.clarke_generators(x, ActiveTol::default())?;
        let selections = cartesian(&gens.iter().map(|g| g.gradients.len()).collect::<Vec<_>>());
        for z in &zs {
            for sel in &selections {
                let mut w = vec![0.0; p.nvars];
                for (j, &s) in sel.iter().enumerate() {
                    axpy(z[j], &gens[j].gradients[s], &mut w);
                }
                let margin = norm(&w);
                if best.as_ref().is_none_or(|(b, _, _)| margin < *b) {
                    best = Some((margin, x.clone(), z.clone()));
                }
            }
        }
    }
    let (min_margin, argmin_x, argmin_z) = best.ok_or(CriticalityError::EmptyGrid { skipped })?;
    Ok(MarginScanReport {
        min_margin,
        argmin_x,
        argmin_z,
        samples,
        skipped,
    })
}

fn cartesian(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &s in sizes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..s).map(move |i| {
                    let mut v = prefix.clone();
                    v.push(i);
                    v
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;

    #[test]
    fn critical_at_one() {
        let p = builtin::example31();
        let c = residual(&p, &[1.0], ActiveTol::default()).unwrap();
        assert_eq!(c.residual, 0.0);
        assert!(c.descent_direction.is_none());
        assert!(is_critical(&p, &[1.0], 1e-8).unwrap());
    }

    #[test]
    fn descent_at_two() {
        let p = builtin::example31();
        let c = residual(&p, &[2.0], ActiveTol::default()).unwrap();
        assert!((c.residual - 0.25).abs() < 1e-12);
        assert_eq!(c.descent_direction, Some(vec![-1.0]));
        let b = c.directional_upper_bounds.unwrap();
        assert!((b[0] + 0.25).abs() < 1e-12);
        assert!((b[1] + (0.5f64.sqrt() - 0.25)).abs() < 1e-12);
        assert!(!is_critical(&p, &[2.0], 1e-8).unwrap());
    }

    #[test]
    fn descent_at_half() {
        let p = builtin::example31();
        let c = residual(&p, &[0.5], ActiveTol::default()).unwrap();
        assert!((c.residual - 2.0).abs() < 1e-12);
        assert_eq!(c.descent_direction, Some(vec![1.0]));
        let b = c.directional_upper_bounds.unwrap();
        assert!((b[0] + 2.0).abs() < 1e-12);
        assert!((b[1] + (4.0 - 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn quad2d_checks() {
        let q = builtin::quad2d();
        assert!(is_critical(&q, &[0.5, 0.5], 1e-8).unwrap());
        assert!(smooth_case_check(&q, &[0.5, 0.5]).unwrap());
        assert!(!smooth_case_check(&q, &[0.0, 0.0]).unwrap());
        let c = residual(&q, &[0.0, 0.0], ActiveTol::default()).unwrap();
        let d = c.descent_direction.unwrap();
        let s = 0.5f64.sqrt();
        assert!((d[0] - s).abs() < 1e-12 && (d[1] - s).abs() < 1e-12);
    }

    #[test]
    fn smooth_case_single_objective_and_rejection() {
        let p = Problem::from_json(
            r#"{"nvars":1,"domain":{"lower":["-inf"],"upper":["inf"]},"reference_point":[0],
                "components":[{"pieces":[{"expr":"(x1-2)^2","lipschitz_grad":2}]}]}"#,
        )
        .unwrap();
        assert!(smooth_case_check(&p, &[2.0]).unwrap());
        assert!(matches!(
            smooth_case_check(&builtin::example31(), &[1.0]),
            Err(CriticalityError::NotSmooth {
                component: 1,
                pieces: 2
            })
        ));
    }

    #[test]
    fn margin_single_point() {
        let p = builtin::example31();
        let c = p.evaluate(&[2.0]).unwrap()[1];
        let r = h3_margin_scan(&p, c, &[vec![2.5]], 1).unwrap();
        assert!((r.min_margin - 0.24).abs() < 1e-14);
        assert_eq!(r.argmin_z, vec![1.0, 0.0]);
        assert_eq!(r.samples, 1);
    }

    #[test]
    fn margin_grid_inside_level_set_is_empty() {
        let p = builtin::example31();
        let c = p.evaluate(&[2.0]).unwrap()[1];
        let grid: Vec<Vec<f64>> = (0..50).map(|i| vec![0.9 + 0.01 * i as f64]).collect();
        assert!(matches!(
            h3_margin_scan(&p, c, &grid, 10),
            Err(CriticalityError::EmptyGrid { skipped: 50 })
        ));
    }

    #[test]
    fn simplex_grid_shape() {
        let g = simplex_grid(3, 2);
        assert_eq!(g.len(), 6);
        assert!(g
            .iter()
            .all(|z| (z.iter().sum::<f64>() - 1.0).abs() < 1e-15));
        assert_eq!(simplex_grid(2, 1), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(simplex_grid(1, 5), vec![vec![1.0]]);
    }
}
