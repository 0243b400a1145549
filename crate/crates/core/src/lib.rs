//! Proximal point method for multiobjective problems whose components are
//! finite maxima of continuously differentiable functions.
//!
//! Each outer step minimizes a Tchebycheff scalarization of the
//! prox-regularized vector objective over the sublevel set of the current
//! iterate; see [`driver::solve`]. Criticality is certified through the
//! minimum-norm point of the pooled active-gradient hulls
//! ([`criticality::residual`]).

pub mod builtin;
pub mod criticality;
pub mod driver;
pub mod expr;
pub mod hull;
pub mod linalg;
pub mod numfmt;
pub mod problem;
pub mod scan;
pub mod subproblem;
pub mod trace_csv;
pub mod verify;

pub use criticality::{CriticalityCertificate, MarginScanReport};
pub use driver::{Schedule, SolveError, SolverConfig, Status, Trace};
pub use expr::{DualVector, EvalError, Expression, ParseError};
pub use hull::{min_norm_point, HullError, MinNormResult};
pub use problem::{ActiveTol, DomainBox, Problem, ProblemError};
pub use subproblem::{ProxInstance, ProxStepResult};
