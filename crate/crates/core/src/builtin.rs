//! Problem files shipped with the crate.

use crate::problem::Problem;

pub const EXAMPLE31_JSON: &str = include_str!("../../../problems/example31.json");
pub const QUAD2D_JSON: &str = include_str!("../../../problems/quad2d.json");

/// Two components on `(0.1, ∞)`, each the maximum of a `+1/x` and a `-1/x`
/// piece: `f_1 = max(ln x ± 1/x)`, `f_2 = max(2√x ± 1/x)`. Both reduce to
/// the `+1/x` branch for `x > 0`, and `x = 1` is the unique weak Pareto point.
pub fn example31() -> Problem {
    Problem::from_json(EXAMPLE31_JSON).expect("shipped example31.json is valid")
}

/// Smooth bi-objective `((x1-1)² + x2², x1² + (x2-1)²)`.
pub fn quad2d() -> Problem {
    Problem::from_json(QUAD2D_JSON).expect("shipped quad2d.json is valid")
}
