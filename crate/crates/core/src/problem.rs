//! Multiobjective problems `F = (f_1, …, f_m)` with `f_j = max_i f_ij`.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::expr::{EvalError, Expression, ParseError};
use crate::linalg::dist;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("malformed problem file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot read problem file: {0}")]
    Io(#[from] std::io::Error),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("component `{component}` piece `{piece}`: {source}")]
    Parse {
        component: String,
        piece: String,
        source: ParseError,
    },
    #[error("component `{component}` piece `{piece}` uses abs and is not C1")]
    NonSmoothPiece { component: String, piece: String },
    #[error("component `{component}` piece `{piece}`: lipschitz_grad must be positive and finite, got {value}")]
    BadLipschitz {
        component: String,
        piece: String,
        value: f64,
    },
    #[error("{what} has {got} entries, expected nvars = {nvars}")]
    InconsistentNvars {
        what: &'static str,
        got: usize,
        nvars: usize,
    },
}

/// Tolerance band deciding which pieces count as active at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActiveTol {
    /// Band `scale * (1 + |f_j(x)|)`.
    Scaled(f64),
    /// Fixed band.
    Absolute(f64),
}

impl ActiveTol {
    pub fn band(self, value: f64) -> f64 {
        match self {
            ActiveTol::Scaled(s) => s * (1.0 + value.abs()),
            ActiveTol::Absolute(eps) => eps,
        }
    }
}

impl Default for ActiveTol {
    fn default() -> Self {
        ActiveTol::Scaled(1e-6)
    }
}

impl From<f64> for ActiveTol {
    fn from(eps: f64) -> Self {
        ActiveTol::Absolute(eps)
    }
}

/// Axis-aligned open box; bounds may be infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DomainBox {
    pub fn unbounded(n: usize) -> Self {
        DomainBox {
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Strict membership in the open box.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| lo < v && v < hi)
    }

    pub fn contains_closed(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }

    pub fn is_finite(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|b| b.is_finite())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| rng.gen_range(*lo..=*hi))
            .collect()
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*lo, *hi);
        }
    }

    pub fn diameter(&self) -> f64 {
        dist(&self.lower, &self.upper)
    }
}

#[derive(Debug, Clone)]
pub struct SmoothPiece {
    pub expr: Expression,
    /// Lipschitz constant of the gradient on the working region.
    pub lipschitz_grad: f64,
    pub label: String,
}

#[derive(Debug, Clone)]
pub struct Component {
    pub name: String,
    pub pieces: Vec<SmoothPiece>,
}

/// Pieces of one component within the active band at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveSet {
    pub component_index: usize,
    pub piece_indices: Vec<usize>,
    pub tolerance: f64,
}

/// Gradients of the active pieces of one component.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveGenerators {
    pub component_index: usize,
    pub value: f64,
    pub piece_indices: Vec<usize>,
    pub gradients: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub name: String,
    pub nvars: usize,
    pub domain: DomainBox,
    pub reference_point: Vec<f64>,
    pub components: Vec<Component>,
    /// Region where the Lipschitz data is valid and where property probes
    /// sample. Falls back to the domain box when absent from the file.
    pub working_region: DomainBox,
}

impl Problem {
    pub fn from_json(text: &str) -> Result<Problem, ProblemError> {
        let doc: ProblemDoc = serde_json::from_str(text)?;
        doc.into_problem()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Problem, ProblemError> {
        Problem::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ProblemDoc::from(self)).expect("problem serializes")
    }

    pub fn num_objectives(&self) -> usize {
        self.components.len()
    }

    fn check_point(&self, x: &[f64]) -> Result<(), EvalError> {
        if x.len() != self.nvars {
            return Err(EvalError::Dimension {
                expected: self.nvars,
                got: x.len(),
            });
        }
        if !self.domain.contains(x) {
            return Err(EvalError::OutsideDomain { point: x.to_vec() });
        }
        Ok(())
    }

    /// Values of every piece of component `j`.
    pub fn piece_values(&self, j: usize, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.check_point(x)?;
        self.components[j]
            .pieces
            .iter()
            .map(|p| p.expr.eval(x))
            .collect()
    }

    /// `F(x)`, each component computed as the maximum over its pieces.
    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.check_point(x)?;
        self.components
            .iter()
            .map(|c| {
                c.pieces
                    .iter()
                    .try_fold(f64::NEG_INFINITY, |acc, p| Ok(acc.max(p.expr.eval(x)?)))
            })
            .collect()
    }

    pub fn active_pieces(
        &self,
        j: usize,
        x: &[f64],
        tol: ActiveTol,
    ) -> Result<ActiveSet, EvalError> {
        let values = self.piece_values(j, x)?;
        let fj = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let band = tol.band(fj);
        Ok(ActiveSet {
            component_index: j,
            piece_indices: (0..values.len())
                .filter(|&i| values[i] >= fj - band)
                .collect(),
            tolerance: band,
        })
    }

    /// Per component, the gradients whose convex hull inner-approximates
    /// the Clarke subdifferential of `f_j` at `x`.
    pub fn clarke_generators(
        &self,
        x: &[f64],
        tol: ActiveTol,
    ) -> Result<Vec<ActiveGenerators>, EvalError> {
        self.check_point(x)?;
        self.components
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let duals = c
                    .pieces
                    .iter()
                    .map(|p| p.expr.eval_grad(x))
                    .collect::<Result<Vec<_>, _>>()?;
                let fj = duals
                    .iter()
                    .map(|d| d.value)
                    .fold(f64::NEG_INFINITY, f64::max);
                let band = tol.band(fj);
                let (piece_indices, gradients) = duals
                    .into_iter()
                    .enumerate()
                    .filter(|(_, d)| d.value >= fj - band)
                    .map(|(i, d)| (i, d.partials))
                    .unzip();
                Ok(ActiveGenerators {
                    component_index: j,
                    value: fj,
                    piece_indices,
                    gradients,
                })
            })
            .collect()
    }

    /// `F(x) ⪯ bound` (closed componentwise inequality).
    pub fn dominated_by(&self, x: &[f64], bound: &[f64]) -> Result<bool, EvalError> {
        Ok(weakly_below(&self.evaluate(x)?, bound))
    }

    /// `F(x) ≺ bound` (strict in every component).
    pub fn strictly_dominated_by(&self, x: &[f64], bound: &[f64]) -> Result<bool, EvalError> {
        Ok(strictly_below(&self.evaluate(x)?, bound))
    }

    pub fn max_lipschitz(&self, j: usize) -> f64 {
        self.components[j]
            .pieces
            .iter()
            .map(|p| p.lipschitz_grad)
            .fold(0.0, f64::max)
    }

    pub fn max_lipschitz_overall(&self) -> f64 {
        (0..self.num_objectives())
            .map(|j| self.max_lipschitz(j))
            .fold(0.0, f64::max)
    }

    /// Bounded box for random probes: the working region, with any
    /// infinite side replaced by the reference point shifted by one.
    pub fn sampling_box(&self) -> DomainBox {
        let w = &self.working_region;
        let r = &self.reference_point;
        DomainBox {
            lower: w
                .lower
                .iter()
                .zip(r)
                .map(|(lo, c)| if lo.is_finite() { *lo } else { c - 1.0 })
                .collect(),
            upper: w
                .upper
                .iter()
                .zip(r)
                .map(|(hi, c)| if hi.is_finite() { *hi } else { c + 1.0 })
                .collect(),
        }
    }

    pub fn pieces(&self) -> impl Iterator<Item = (usize, usize, &SmoothPiece)> {
        self.components
            .iter()
            .enumerate()
            .flat_map(|(j, c)| c.pieces.iter().enumerate().map(move |(i, p)| (j, i, p)))
    }
}

/// `a ⪯ b`.
pub fn weakly_below(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(u, v)| u <= v)
}

/// `a ≺ b`.
pub fn strictly_below(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(u, v)| u < v)
}

/// Largest observed gradient-difference ratio over sampled pairs in
/// `region`: half uniform pairs, half pairs at distance below 1e-3 of the
/// region diameter. A heuristic lower estimate of the true constant.
pub fn estimate_lipschitz<R: Rng + ?Sized>(
    expr: &Expression,
    region: &DomainBox,
    samples: usize,
    rng: &mut R,
) -> Result<f64, EvalError> {
    let radius = 1e-3 * region.diameter();
    let mut worst = 0.0_f64;
    for s in 0..samples {
        let x = region.sample(rng);
        let y = if s % 2 == 0 {
            region.sample(rng)
        } else {
            let mut y: Vec<f64> = x
                .iter()
                .map(|v| v + rng.gen_range(-radius..=radius))
                .collect();
            region.clamp(&mut y);
            y
        };
        let d = dist(&x, &y);
        if d == 0.0 {
            continue;
        }
        let gx = expr.eval_grad(&x)?.partials;
        let gy = expr.eval_grad(&y)?.partials;
        worst = worst.max(dist(&gx, &gy) / d);
    }
    Ok(worst)
}

// --- file format -----------------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct Bound(f64);

impl<'de> Deserialize<'de> for Bound {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Bound(v)),
            Raw::Text(s) => match s.as_str() {
                "inf" | "+inf" => Ok(Bound(f64::INFINITY)),
                "-inf" => Ok(Bound(f64::NEG_INFINITY)),
                other => Err(serde::de::Error::custom(format!(
                    "bound must be a number, \"inf\" or \"-inf\", got {other:?}"
                ))),
            },
        }
    }
}

impl Serialize for Bound {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            s.serialize_str("inf")
        } else if self.0 == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxDoc {
    lower: Vec<Bound>,
    upper: Vec<Bound>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PieceDoc {
    expr: String,
    lipschitz_grad: f64,
    #[serde(default)]
    label: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentDoc {
    #[serde(default)]
    name: String,
    pieces: Vec<PieceDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemDoc {
    #[serde(default)]
    name: String,
    nvars: usize,
    domain: BoxDoc,
    reference_point: Vec<f64>,
    components: Vec<ComponentDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    working_region: Option<BoxDoc>,
}

impl BoxDoc {
    fn into_box(self, nvars: usize, what: &'static str) -> Result<DomainBox, ProblemError> {
        if self.lower.len() != nvars || self.upper.len() != nvars {
            return Err(ProblemError::InconsistentNvars {
                what,
                got: self.lower.len().max(self.upper.len()),
                nvars,
            });
        }
        let lower: Vec<f64> = self.lower.into_iter().map(|b| b.0).collect();
        let upper: Vec<f64> = self.upper.into_iter().map(|b| b.0).collect();
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return Err(ProblemError::Schema(format!(
                    "{what}: coordinate {} has lower {lo} not below upper {hi}",
                    i + 1
                )));
            }
        }
        Ok(DomainBox { lower, upper })
    }

    fn from_box(b: &DomainBox) -> Self {
        BoxDoc {
            lower: b.lower.iter().map(|&v| Bound(v)).collect(),
            upper: b.upper.iter().map(|&v| Bound(v)).collect(),
        }
    }
}

impl ProblemDoc {
    fn into_problem(self) -> Result<Problem, ProblemError> {
        let nvars = self.nvars;
        if nvars == 0 {
            return Err(ProblemError::Schema("nvars must be positive".into()));
        }
        if self.components.is_empty() {
            return Err(ProblemError::Schema(
                "at least one component is required".into(),
            ));
        }
        let domain = self.domain.into_box(nvars, "domain")?;
        if self.reference_point.len() != nvars {
            return Err(ProblemError::InconsistentNvars {
                what: "reference_point",
                got: self.reference_point.len(),
                nvars,
            });
        }
        if !domain.contains_closed(&self.reference_point) {
            return Err(ProblemError::Schema(
                "reference_point lies outside the closed domain box".into(),
            ));
        }
        let working_region = match self.working_region {
            Some(w) => {
                let w = w.into_box(nvars, "working_region")?;
                if !w.is_finite() {
                    return Err(ProblemError::Schema(
                        "working_region must be bounded".into(),
                    ));
                }
                w
            }
            None => domain.clone(),
        };
        let mut components = Vec::with_capacity(self.components.len());
        for (j, c) in self.components.into_iter().enumerate() {
            let cname = if c.name.is_empty() {
                format!("f{}", j + 1)
            } else {
                c.name
            };
            if c.pieces.is_empty() {
                return Err(ProblemError::Schema(format!(
                    "component `{cname}` has no pieces"
                )));
            }
            let mut pieces = Vec::with_capacity(c.pieces.len());
            for (i, p) in c.pieces.into_iter().enumerate() {
                let label = if p.label.is_empty() {
                    format!("f{}{}", i + 1, j + 1)
                } else {
                    p.label
                };
                let expr =
                    Expression::parse(&p.expr, nvars).map_err(|source| ProblemError::Parse {
                        component: cname.clone(),
                        piece: label.clone(),
                        source,
                    })?;
                if expr.uses_abs() {
                    return Err(ProblemError::NonSmoothPiece {
                        component: cname,
                        piece: label,
                    });
                }
                if !(p.lipschitz_grad > 0.0 && p.lipschitz_grad.is_finite()) {
                    return Err(ProblemError::BadLipschitz {
                        component: cname,
                        piece: label,
                        value: p.lipschitz_grad,
                    });
                }
                pieces.push(SmoothPiece {
                    expr,
                    lipschitz_grad: p.lipschitz_grad,
                    label,
                });
            }
            components.push(Component {
                name: cname,
                pieces,
            });
        }
        Ok(Problem {
            name: self.name,
            nvars,
            domain,
            reference_point: self.reference_point,
            components,
            working_region,
        })
    }
}

impl From<&Problem> for ProblemDoc {
    fn from(p: &Problem) -> Self {
        ProblemDoc {
            name: p.name.clone(),
            nvars: p.nvars,
            domain: BoxDoc::from_box(&p.domain),
            reference_point: p.reference_point.clone(),
            components: p
                .components
                .iter()
                .map(|c| ComponentDoc {
                    name: c.name.clone(),
                    pieces: c
                        .pieces
                        .iter()
                        .map(|s| PieceDoc {
                            expr: s.expr.to_string(),
                            lipschitz_grad: s.lipschitz_grad,
                            label: s.label.clone(),
                        })
                        .collect(),
                })
                .collect(),
            working_region: (p.working_region != p.domain)
                .then(|| BoxDoc::from_box(&p.working_region)),
        }
    }
}

#[cfg(test)]
#[allow(clippy::approx_constant)]
mod tests {
    use super::*;
    use crate::builtin;

    fn tie_problem() -> Problem {
        Problem::from_json(
            r#"{"nvars":1,"domain":{"lower":["-inf"],"upper":["inf"]},"reference_point":[0.0],
                "components":[{"pieces":[{"expr":"x1","lipschitz_grad":1},{"expr":"-x1","lipschitz_grad":1}]}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn shipped_example_loads() {
        let p = builtin::example31();
        assert_eq!(p.num_objectives(), 2);
        assert_eq!(p.nvars, 1);
        assert!(p.components.iter().all(|c| c.pieces.len() == 2));
        let x: f64 = 1.37;
        let expected = [
            x.ln() + 1.0 / x,
            x.ln() - 1.0 / x,
            2.0 * x.sqrt() + 1.0 / x,
            2.0 * x.sqrt() - 1.0 / x,
        ];
        for ((_, _, piece), want) in p.pieces().zip(expected) {
            assert!((piece.expr.eval(&[x]).unwrap() - want).abs() < 1e-15);
        }
        assert_eq!(p.reference_point, vec![2.718281828]);
    }

    #[test]
    fn single_piece_quadratic() {
        let p = Problem::from_json(
            r#"{"name":"q","nvars":1,"domain":{"lower":["-inf"],"upper":["inf"]},"reference_point":[3],
                "components":[{"name":"q","pieces":[{"expr":"(x1-1)^2","lipschitz_grad":2,"label":"q"}]}]}"#,
        )
        .unwrap();
        assert_eq!(p.num_objectives(), 1);
        assert_eq!(p.components[0].pieces.len(), 1);
        assert_eq!(p.evaluate(&[3.0]).unwrap(), vec![4.0]);
    }

    #[test]
    fn rejections() {
        let base = |pieces: &str, extra: &str| {
            format!(
                r#"{{"nvars":1,"domain":{{"lower":[0],"upper":["inf"]}},"reference_point":[1]{extra},
                     "components":[{{"pieces":[{pieces}]}}]}}"#
            )
        };
        let abs = base(r#"{"expr":"abs(x1)","lipschitz_grad":1}"#, "");
        assert!(matches!(
            Problem::from_json(&abs),
            Err(ProblemError::NonSmoothPiece { .. })
        ));
        let zero_l = base(r#"{"expr":"x1","lipschitz_grad":0}"#, "");
        assert!(matches!(
            Problem::from_json(&zero_l),
            Err(ProblemError::BadLipschitz { .. })
        ));
        let no_pieces = base("", "");
        assert!(matches!(
            Problem::from_json(&no_pieces),
            Err(ProblemError::Schema(_))
        ));
        let bad_var = base(r#"{"expr":"x2","lipschitz_grad":1}"#, "");
        assert!(matches!(
            Problem::from_json(&bad_var),
            Err(ProblemError::Parse { .. })
        ));
        let no_components = r#"{"nvars":1,"domain":{"lower":[0],"upper":[1]},"reference_point":[0.5],"components":[]}"#;
        assert!(matches!(
            Problem::from_json(no_components),
            Err(ProblemError::Schema(_))
        ));
        let bad_ref = r#"{"nvars":1,"domain":{"lower":[0],"upper":[1]},"reference_point":[2],
            "components":[{"pieces":[{"expr":"x1","lipschitz_grad":1}]}]}"#;
        assert!(matches!(
            Problem::from_json(bad_ref),
            Err(ProblemError::Schema(_))
        ));
        let bad_dim = r#"{"nvars":2,"domain":{"lower":[0],"upper":[1]},"reference_point":[0.5,0.5],
            "components":[{"pieces":[{"expr":"x1","lipschitz_grad":1}]}]}"#;
        assert!(matches!(
            Problem::from_json(bad_dim),
            Err(ProblemError::InconsistentNvars { what: "domain", .. })
        ));
        let unknown = r#"{"nvars":1,"domain":{"lower":[0],"upper":[1]},"reference_point":[0.5],"color":1,
            "components":[{"pieces":[{"expr":"x1","lipschitz_grad":1}]}]}"#;
        assert!(matches!(
            Problem::from_json(unknown),
            Err(ProblemError::Json(_))
        ));
        assert!(matches!(
            Problem::from_json("{"),
            Err(ProblemError::Json(_))
        ));
    }

    #[test]
    fn evaluate_examples() {
        let p = builtin::example31();
        assert_eq!(p.evaluate(&[1.0]).unwrap(), vec![1.0, 3.0]);
        let f = p.evaluate(&[2.0]).unwrap();
        assert!((f[0] - (2f64.ln() + 0.5)).abs() < 1e-15);
        assert!((f[1] - (2.0 * 2f64.sqrt() + 0.5)).abs() < 1e-15);
        assert!((f[0] - 1.19315).abs() < 1e-5 && (f[1] - 3.32843).abs() < 1e-5);
        let f = p.evaluate(&[0.5]).unwrap();
        assert!((f[0] - 1.30685).abs() < 1e-5 && (f[1] - 3.41421).abs() < 1e-5);
        assert!(matches!(
            p.evaluate(&[0.05]),
            Err(EvalError::OutsideDomain { .. })
        ));
        assert!(matches!(
            p.evaluate(&[1.0, 2.0]),
            Err(EvalError::Dimension { .. })
        ));
    }

    #[test]
    fn active_piece_examples() {
        let p = builtin::example31();
        let a = p
            .active_pieces(0, &[1.0], ActiveTol::Absolute(0.0))
            .unwrap();
        assert_eq!(a.piece_indices, vec![0]);
        let a = p.active_pieces(1, &[2.0], 1.0.into()).unwrap();
        assert_eq!(a.piece_indices, vec![0, 1]);
        let t = tie_problem();
        let a = t.active_pieces(0, &[0.0], 0.0.into()).unwrap();
        assert_eq!(a.piece_indices, vec![0, 1]);
    }

    #[test]
    fn generator_examples() {
        let p = builtin::example31();
        let g = p.clarke_generators(&[1.0], 0.0.into()).unwrap();
        assert_eq!(g[0].gradients, vec![vec![0.0]]);
        assert_eq!(g[1].gradients, vec![vec![0.0]]);
        let g = p.clarke_generators(&[2.0], 0.0.into()).unwrap();
        assert!((g[0].gradients[0][0] - 0.25).abs() < 1e-15);
        let d2 = 1.0 / 2f64.sqrt() - 0.25;
        assert!((g[1].gradients[0][0] - d2).abs() < 1e-15);
        assert!((d2 - 0.45711).abs() < 1e-5);
        let t = tie_problem();
        let g = t.clarke_generators(&[0.0], 0.0.into()).unwrap();
        assert_eq!(g[0].gradients, vec![vec![1.0], vec![-1.0]]);
    }

    #[test]
    fn dominance_examples() {
        let p = builtin::example31();
        let fy = p.evaluate(&p.reference_point).unwrap();
        assert!((fy[0] - 1.36788).abs() < 1e-5 && (fy[1] - 3.66532).abs() < 1e-5);
        assert!(p.dominated_by(&[1.0], &fy).unwrap());
        let f = p.evaluate(&[0.73]).unwrap();
        assert!(p.dominated_by(&[0.73], &f).unwrap());
        assert!(!p.strictly_dominated_by(&[0.73], &f).unwrap());
        let c = p.evaluate(&[2.0]).unwrap()[1];
        assert!(!p.dominated_by(&[0.47], &[c, c]).unwrap());
    }

    #[test]
    fn lipschitz_maxima() {
        let p = builtin::example31();
        assert_eq!(p.max_lipschitz(0), 27.0);
        assert_eq!(p.max_lipschitz(1), 24.0);
        let doc = |ls: &str| {
            format!(
                r#"{{"nvars":1,"domain":{{"lower":["-inf"],"upper":["inf"]}},"reference_point":[0],
                    "components":[{{"pieces":[{ls}]}}]}}"#
            )
        };
        let one = Problem::from_json(&doc(r#"{"expr":"x1^2","lipschitz_grad":5}"#)).unwrap();
        assert_eq!(one.max_lipschitz(0), 5.0);
        let two = Problem::from_json(&doc(
            r#"{"expr":"x1^2","lipschitz_grad":3},{"expr":"x1^2","lipschitz_grad":7}"#,
        ))
        .unwrap();
        assert_eq!(two.max_lipschitz(0), 7.0);
    }

    #[test]
    fn json_round_trip_preserves_semantics() {
        let p = builtin::example31();
        let q = Problem::from_json(&p.to_json()).unwrap();
        assert_eq!(q.domain, p.domain);
        assert_eq!(q.working_region, p.working_region);
        for x in [0.5, 1.0, 2.2] {
            assert_eq!(q.evaluate(&[x]).unwrap(), p.evaluate(&[x]).unwrap());
        }
    }
}
