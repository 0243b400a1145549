use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "proxmo",
    version,
    about = "Proximal point solver for max-type multiobjective problems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the proximal iteration and print a summary as JSON.
    Solve(SolveArgs),
    /// Criticality residual and descent direction at a point.
    Critical(CriticalArgs),
    /// Weak-Pareto points of a uniform grid (at most 2 variables).
    Scan(ScanArgs),
    /// Sampled checks of gradients, Lipschitz data, hull solver and convexity.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct ProblemArg {
    /// Problem file (JSON).
    #[arg(long, value_name = "PATH")]
    pub problem: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArg,
    /// Starting point; defaults to the problem's reference point.
    #[arg(long, value_name = "V1,V2,...", value_parser = parse_vector, allow_hyphen_values = true)]
    pub x0: Option<Vector>,
    #[arg(long, value_name = "N", default_value_t = 1000)]
    pub max_iter: usize,
    /// Stop when a step is at most this long.
    #[arg(long, value_name = "VAL", default_value_t = 1e-8)]
    pub tol: f64,
    /// Constant proximal parameter.
    #[arg(long, value_name = "VAL")]
    pub lambda: Option<f64>,
    /// Lower bound for the weight vector entries.
    #[arg(long, value_name = "VAL")]
    pub mu_bar: Option<f64>,
    /// Write the iteration trace as CSV.
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
    /// Allow lambda at or below the strong-convexity threshold.
    #[arg(long)]
    pub override_lambda_check: bool,
}

#[derive(Debug, Args)]
pub struct CriticalArgs {
    #[command(flatten)]
    pub problem: ProblemArg,
    #[arg(long, value_name = "V1,V2,...", value_parser = parse_vector, allow_hyphen_values = true)]
    pub x: Vector,
    /// Absolute band for active pieces; default is 1e-6 (1 + |f_j(x)|).
    #[arg(long, value_name = "VAL")]
    pub eps_active: Option<f64>,
    #[arg(long, value_name = "VAL", default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub problem: ProblemArg,
    #[arg(long, value_name = "V1,...", value_parser = parse_vector, allow_hyphen_values = true)]
    pub lo: Vector,
    #[arg(long, value_name = "V1,...", value_parser = parse_vector, allow_hyphen_values = true)]
    pub hi: Vector,
    #[arg(long, value_name = "VAL")]
    pub step: f64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub problem: ProblemArg,
    #[arg(long, value_name = "N", default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, value_name = "N", default_value_t = 42)]
    pub seed: u64,
}

/// Comma-separated list of finite numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector(pub Vec<f64>);

fn parse_vector(text: &str) -> Result<Vector, String> {
    let values = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| format!("`{}` is not a number", s.trim()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err("entries must be finite".into());
    }
    Ok(Vector(values))
}
