//! Brute-force weak-Pareto scan over a uniform grid (n ≤ 2).

use thiserror::Error;

use crate::expr::EvalError;
use crate::problem::{strictly_below, Problem};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScanError {
    #[error("grid scan supports at most 2 variables, problem has {0}")]
    TooManyVariables(usize),
    #[error("step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("bounds must be finite with lo <= hi and have {expected} entries")]
    BadBounds { expected: usize },
    #[error("grid has {0} points, limit is {MAX_GRID_POINTS}")]
    TooLarge(usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

pub const MAX_GRID_POINTS: usize = 25_000_000;

/// Grid `lo + i·step` per axis, `i = 0..=⌊(hi−lo)/step⌋`, first axis
/// varying slowest.
pub fn grid(lo: &[f64], hi: &[f64], step: f64) -> Result<Vec<Vec<f64>>, ScanError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(ScanError::BadStep(step));
    }
    if lo.len() != hi.len()
        || lo
            .iter()
            .zip(hi)
            .any(|(a, b)| !(a.is_finite() && b.is_finite() && a <= b))
    {
        return Err(ScanError::BadBounds { expected: lo.len() });
    }
    let counts: Vec<usize> = lo
        .iter()
        .zip(hi)
        .map(|(a, b)| ((b - a) / step + 1e-9).floor() as usize + 1)
        .collect();
    let total = counts.iter().try_fold(1usize, |acc, c| acc.checked_mul(*c));
    match total {
        Some(t) if t <= MAX_GRID_POINTS => {}
        t => return Err(ScanError::TooLarge(t.unwrap_or(usize::MAX))),
    }
    let mut points = vec![Vec::new()];
    for (axis, &count) in counts.iter().enumerate() {
        points = points
            .into_iter()
            .flat_map(|prefix| {
                (0..count).map(move |i| {
                    let mut p = prefix.clone();
                    p.push(lo[axis] + i as f64 * step);
                    p
                })
            })
            .collect();
    }
    Ok(points)
}

/// Grid points of `[lo, hi]` outside the open domain are dropped. Returns
/// the remaining points that no other grid point strictly dominates, in
/// grid order.
pub fn pareto_scan_grid(
    p: &Problem,
    lo: &[f64],
    hi: &[f64],
    step: f64,
) -> Result<Vec<Vec<f64>>, ScanError> {
    if p.nvars > 2 {
        return Err(ScanError::TooManyVariables(p.nvars));
    }
    if lo.len() != p.nvars {
        return Err(ScanError::BadBounds { expected: p.nvars });
    }
    let mut points = Vec::new();
    let mut values = Vec::new();
    for x in grid(lo, hi, step)? {
        if !p.domain.contains(&x) {
            continue;
        }
        values.push(p.evaluate(&x)?);
        points.push(x);
    }
    let keep = nondominated(&values);
    Ok(points
        .into_iter()
        .zip(keep)
        .filter_map(|(x, k)| k.then_some(x))
        .collect())
}

/// `keep[i]` is true when no `values[j]` is strictly below `values[i]`.
pub fn nondominated(values: &[Vec<f64>]) -> Vec<bool> {
    let m = values.first().map_or(0, Vec::len);
    match m {
        0 => vec![true; values.len()],
        1 => {
            let best = values.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
            values.iter().map(|v| v[0] <= best).collect()
        }
        2 => sweep2(values),
        _ => values
            .iter()
            .map(|v| !values.iter().any(|w| strictly_below(w, v)))
            .collect(),
    }
}

/// Sort by the first objective; a point is dominated iff some point with a
/// strictly smaller first value has a strictly smaller second value.
fn sweep2(values: &[Vec<f64>]) -> Vec<bool> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a][0].total_cmp(&values[b][0]));
    let mut keep = vec![true; values.len()];
    let mut best_f2 = f64::INFINITY;
    let mut start = 0;
    while start < order.len() {
        let f1 = values[order[start]][0];
        let mut end = start;
        while end < order.len() && values[order[end]][0] == f1 {
            end += 1;
        }
        let mut group_min = f64::INFINITY;
        for &i in &order[start..end] {
            keep[i] = values[i][1] <= best_f2;
            group_min = group_min.min(values[i][1]);
        }
        best_f2 = best_f2.min(group_min);
        start = end;
    }
    keep
}
