//! Sampled property suites over a problem: gradients against finite
//! differences, declared Lipschitz constants, the hull solver against its
//! grid oracle, strong convexity of the default subproblem, and midpoint
//! convexity of sublevel sets.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::driver::default_config;
use crate::hull::{brute_force_min_norm, min_norm_point};
use crate::linalg::{dist, dot, norm};
use crate::numfmt::serialize_f64;
use crate::problem::{weakly_below, DomainBox, Problem};
use crate::subproblem::{strong_convexity_probe, ProxInstance};

pub const FD_STEP: f64 = 1e-6;
pub const FD_TOL: f64 = 1e-6;
pub const HULL_GRID_STEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: &'static str,
    pub passed: bool,
    pub checks: usize,
    pub failures: usize,
    /// Suite-specific worst statistic; see [`verify`].
    #[serde(serialize_with = "serialize_f64")]
    pub worst: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub problem: String,
    pub samples: usize,
    pub seed: u64,
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
}

impl VerifyReport {
    pub fn suite(&self, name: &str) -> Option<&SuiteReport> {
        self.suites.iter().find(|s| s.name == name)
    }
}

/// Runs every suite with `samples` draws each. Worst statistics:
///
/// * `gradient`: largest relative gradient error from `fd_check`.
/// * `lipschitz`: largest ratio of observed gradient slope to declared `L`.
/// * `hull`: largest excess of the solver norm over the grid oracle norm.
/// * `strong_convexity`: largest excess in the secant inequality.
/// * `sublevel_convexity`: largest excess of `F(midpoint)` over `F(x^k)`.
pub fn verify(p: &Problem, samples: usize, seed: u64) -> VerifyReport {
    let suites = vec![
        gradient_suite(p, samples, &mut rng_for(seed, 0)),
        lipschitz_suite(p, samples, &mut rng_for(seed, 1)),
        hull_suite(p, samples, &mut rng_for(seed, 2)),
        strong_convexity_suite(p, samples, seed, &mut rng_for(seed, 3)),
        sublevel_suite(p, samples, &mut rng_for(seed, 4)),
    ];
    VerifyReport {
        problem: p.name.clone(),
        samples,
        seed,
        passed: suites.iter().all(|s| s.passed),
        suites,
    }
}

fn rng_for(seed: u64, suite: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(suite))
}

fn report(
    name: &'static str,
    checks: usize,
    failures: usize,
    worst: f64,
    note: String,
) -> SuiteReport {
    SuiteReport {
        name,
        passed: failures == 0,
        checks,
        failures,
        worst,
        note,
    }
}

/// Draws a point of `region` inside the open domain, giving up after 100
/// attempts.
fn draw(p: &Problem, region: &DomainBox, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    (0..100)
        .map(|_| region.sample(rng))
        .find(|x| p.domain.contains(x))
}

fn gradient_suite(p: &Problem, samples: usize, rng: &mut ChaCha8Rng) -> SuiteReport {
    let region = p.sampling_box();
    let (mut checks, mut failures, mut worst) = (0, 0, 0.0_f64);
    for _ in 0..samples {
        let Some(x) = draw(p, &region, rng) else {
            continue;
        };
        for (_, _, piece) in p.pieces() {
            checks += 1;
            match piece.expr.fd_check(&x, FD_STEP) {
                Ok(err) => {
                    worst = worst.max(err);
                    if err > FD_TOL {
                        failures += 1;
                    }
                }
                Err(_) => failures += 1,
            }
        }
    }
    report(
        "gradient",
        checks,
        failures,
        worst,
        format!("tol {FD_TOL:e}"),
    )
}

fn lipschitz_suite(p: &Problem, samples: usize, rng: &mut ChaCha8Rng) -> SuiteReport {
    let region = p.sampling_box();
    let radius = 1e-3 * region.diameter();
    let (mut checks, mut failures, mut worst) = (0, 0, 0.0_f64);
    for s in 0..samples {
        let Some(x) = draw(p, &region, rng) else {
            continue;
        };
        let y = if s % 2 == 0 {
            draw(p, &region, rng)
        } else {
            let mut y: Vec<f64> = x
                .iter()
                .map(|v| v + rng.gen_range(-radius..=radius))
                .collect();
            region.clamp(&mut y);
            p.domain.contains(&y).then_some(y)
        };
        let Some(y) = y else { continue };
        let d = dist(&x, &y);
        if d == 0.0 {
            continue;
        }
        for (_, _, piece) in p.pieces() {
            checks += 1;
            let (Ok(gx), Ok(gy)) = (piece.expr.eval_grad(&x), piece.expr.eval_grad(&y)) else {
                failures += 1;
                continue;
            };
            let slope = dist(&gx.partials, &gy.partials);
            worst = worst.max(slope / (piece.lipschitz_grad * d));
            if slope > piece.lipschitz_grad * d * (1.0 + 1e-9) + 1e-12 {
                failures += 1;
            }
        }
    }
    report(
        "lipschitz",
        checks,
        failures,
        worst,
        "observed slope / declared L".into(),
    )
}

fn hull_suite(p: &Problem, samples: usize, rng: &mut ChaCha8Rng) -> SuiteReport {
    let region = p.sampling_box();
    let (mut checks, mut failures, mut worst) = (0, 0, f64::NEG_INFINITY);
    for _ in 0..samples {
        let Some(x) = draw(p, &region, rng) else {
            continue;
        };
        let Ok(mut gens) = p
            .pieces()
            .map(|(_, _, piece)| piece.expr.eval_grad(&x).map(|g| g.partials))
            .collect::<Result<Vec<_>, _>>()
        else {
            continue;
        };
        gens.shuffle(rng);
        gens.truncate(4);
        checks += 1;
        let (Ok(mn), Ok(oracle)) = (
            min_norm_point(&gens),
            brute_force_min_norm(&gens, HULL_GRID_STEPS),
        ) else {
            failures += 1;
            continue;
        };
        let excess = mn.norm - norm(&oracle);
        worst = worst.max(excess);
        let scale = gens.iter().map(|g| dot(g, g)).fold(1.0, f64::max);
        let pp = mn.norm * mn.norm;
        let vi_ok = gens.iter().all(|g| dot(&mn.point, g) >= pp - 1e-8 * scale);
        if excess > 1e-6 || !vi_ok {
            failures += 1;
        }
    }
    report(
        "hull",
        checks,
        failures,
        worst,
        format!("grid oracle with {HULL_GRID_STEPS} steps"),
    )
}

fn strong_convexity_suite(
    p: &Problem,
    samples: usize,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> SuiteReport {
    let cfg = default_config(p);
    let region = p.sampling_box();
    let Some(center) = draw(p, &region, rng) else {
        return report(
            "strong_convexity",
            0,
            1,
            f64::NAN,
            "no center in domain".into(),
        );
    };
    let inst = match ProxInstance::new(p, center, *cfg.lambda.at(0), cfg.weights_e.at(0).clone()) {
        Ok(inst) => inst,
        Err(e) => return report("strong_convexity", 0, 1, f64::NAN, e.to_string()),
    };
    let probe = strong_convexity_probe(&inst, samples, seed);
    report(
        "strong_convexity",
        probe.trials,
        probe.violations,
        probe.worst_excess,
        format!("default lambda, modulus {:e}", probe.modulus),
    )
}

fn sublevel_suite(p: &Problem, samples: usize, rng: &mut ChaCha8Rng) -> SuiteReport {
    let region = p.sampling_box();
    let (mut checks, mut failures, mut worst) = (0, 0, f64::NEG_INFINITY);
    let member = |x: &[f64], level: &[f64]| {
        p.evaluate(x)
            .map(|f| weakly_below(&f, level))
            .unwrap_or(false)
    };
    for _ in 0..samples {
        let Some(center) = draw(p, &region, rng) else {
            continue;
        };
        let Ok(level) = p.evaluate(&center) else {
            continue;
        };
        let pick = |rng: &mut ChaCha8Rng| {
            (0..50)
                .map(|_| region.sample(rng))
                .find(|x| p.domain.contains(x) && member(x, &level))
        };
        let (Some(x), Some(y)) = (pick(rng), pick(rng)) else {
            continue;
        };
        let t: f64 = rng.gen_range(0.0..=1.0);
        let mid: Vec<f64> = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (1.0 - t) * a + t * b)
            .collect();
        checks += 1;
        let Ok(fm) = p.evaluate(&mid) else {
            failures += 1;
            continue;
        };
        let excess = fm
            .iter()
            .zip(&level)
            .map(|(f, l)| (f - l) / (1.0 + l.abs()))
            .fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max(excess);
        if excess > 1e-12 {
            failures += 1;
        }
    }
    report(
        "sublevel_convexity",
        checks,
        failures,
        worst,
        "midpoints of sampled pairs in the sublevel set of a random center".into(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;

    #[test]
    fn shipped_problems_pass() {
        for p in [builtin::example31(), builtin::quad2d()] {
            let r = verify(&p, 200, 42);
            assert!(r.passed, "{r:#?}");
            assert!(r.suites.iter().all(|s| s.checks > 0), "{r:#?}");
        }
    }

    #[test]
    fn corrupted_lipschitz_fails() {
        let mut p = builtin::example31();
        for c in &mut p.components {
            for piece in &mut c.pieces {
                piece.lipschitz_grad *= 0.1;
            }
        }
        let r = verify(&p, 200, 42);
        assert!(!r.suite("lipschitz").unwrap().passed);
        assert!(!r.passed);
    }

    #[test]
    fn deterministic_for_seed() {
        let p = builtin::example31();
        assert_eq!(verify(&p, 50, 7), verify(&p, 50, 7));
    }
}
