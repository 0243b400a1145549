use proptest::prelude::*;

use proxmo_core::criticality::residual;
use proxmo_core::driver::{default_config, solve, IterateRecord, Schedule, Status, Trace};
use proxmo_core::linalg::norm;
use proxmo_core::problem::weakly_below;
use proxmo_core::scan::pareto_scan_grid;
use proxmo_core::subproblem::{solve_inner, solve_inner_from, InnerOptions, ProxInstance};
use proxmo_core::trace_csv::{read_trace, write_trace};
use proxmo_core::{builtin, ActiveTol, Problem};

/// Unit vectors `(cos t, sin t)` with both entries above `mu_bar`.
fn weights(mu_bar: f64, u: f64) -> Vec<f64> {
    let lo = mu_bar.asin();
    let hi = mu_bar.acos();
    let t = lo + (hi - lo) * (0.01 + 0.98 * u);
    vec![t.cos(), t.sin()]
}

fn check_record_invariants(p: &Problem, cfg: &proxmo_core::SolverConfig, t: &Trace) {
    let thr = cfg.lambda_threshold(p);
    for (k, r) in t.records.iter().enumerate().skip(1) {
        let lambda = r.lambda.unwrap();
        let e = r.e.as_ref().unwrap();
        assert_eq!(lambda, *cfg.lambda.at(k - 1));
        assert_eq!(e, cfg.weights_e.at(k - 1));
        assert!(lambda > thr && lambda <= cfg.lambda_bar);
        assert!((norm(e) - 1.0).abs() <= 1e-12);
        assert!(e.iter().all(|v| *v > cfg.mu_bar));
        let z = r.z.as_ref().unwrap();
        assert!((norm(z) - 1.0).abs() <= 1e-10);
        assert!(z.iter().all(|v| *v >= 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn schedules_are_followed(
        x0 in 0.5..2.7f64,
        lambdas in prop::collection::vec(1.0..3.0f64, 1..6),
        angles in prop::collection::vec(0.0..1.0f64, 1..6),
    ) {
        let p = builtin::example31();
        let mut cfg = default_config(&p);
        let thr = cfg.lambda_threshold(&p);
        cfg.lambda = Schedule::Sequence(lambdas.iter().map(|s| s * thr * 1.001).collect());
        cfg.weights_e = Schedule::Sequence(angles.iter().map(|u| weights(cfg.mu_bar, *u)).collect());
        cfg.validate(&p).unwrap();
        let t = solve(&p, &[x0], &cfg).unwrap();
        prop_assert!(matches!(t.status, Status::Converged | Status::MaxIterations));
        check_record_invariants(&p, &cfg, &t);
        prop_assert_eq!(t.monotone_violations(), 0);
        prop_assert!(t.sum_squared_steps().is_finite());
    }

    #[test]
    fn inner_step_invariants(center in 0.46..2.74f64, du in -0.01..0.01f64) {
        let p = builtin::example31();
        let cfg = default_config(&p);
        let inst = ProxInstance::new(&p, vec![center], *cfg.lambda.at(0), cfg.weights_e.at(0).clone()).unwrap();
        let opts = InnerOptions { tol: 1e-9, ..Default::default() };
        let r = solve_inner(&inst, &opts).unwrap();
        prop_assert!(r.converged);
        prop_assert!(r.value <= 0.0);
        prop_assert!(r.objective_gap_vector.iter().all(|g| *g >= -1e-10));
        prop_assert!((norm(&r.weights_z) - 1.0).abs() <= 1e-10);
        // nonincreasing up to the rounding level of Φ
        prop_assert!(r.phi_history.windows(2).all(|w| w[1] <= w[0] + 1e-13));
        let other = solve_inner_from(&inst, vec![center + du], &opts).unwrap();
        prop_assert!((other.next[0] - r.next[0]).abs() <= 1e-6);
    }

    #[test]
    fn smooth_prox_gradient_identity(center in -2.0..2.0f64, lambda in 3.0..50.0f64) {
        let p = Problem::from_json(
            r#"{"nvars":1,"domain":{"lower":["-inf"],"upper":["inf"]},"reference_point":[0],
                "components":[{"pieces":[{"expr":"(x1 - 1)^2 + sin(x1)","lipschitz_grad":3}]}]}"#,
        ).unwrap();
        let inst = ProxInstance::new(&p, vec![center], lambda, vec![1.0]).unwrap();
        let r = solve_inner(&inst, &InnerOptions { tol: 1e-10, ..Default::default() }).unwrap();
        let y = r.next[0];
        let resid = 2.0 * (y - 1.0) + y.cos() + lambda * (y - center);
        prop_assert!(resid.abs() <= 1e-10, "{resid}");
    }

    #[test]
    fn csv_round_trip(rows in prop::collection::vec((prop::collection::vec(any::<f64>(), 1..3), any::<f64>(), any::<bool>()), 1..8)) {
        let records: Vec<IterateRecord> = rows
            .into_iter()
            .enumerate()
            .map(|(k, (x, v, step))| IterateRecord {
                k,
                f_of_x: x.iter().map(|a| a * 0.5).collect(),
                x,
                lambda: step.then_some(v),
                e: step.then(|| vec![v, -v]),
                z: step.then(|| vec![0.6, 0.8]),
                step_norm: step.then_some(v.abs()),
                inner_iterations: step.then_some(k * 3),
                stationarity: step.then_some(1e-300),
                criticality_residual: v,
            })
            .filter(|r| r.x.iter().chain(&r.f_of_x).all(|v| v.is_finite()) && r.criticality_residual.is_finite())
            .collect();
        let trace = Trace { records: records.clone(), status: Status::Converged, final_point: vec![] };
        let mut buf = Vec::new();
        write_trace(&trace, &mut buf).unwrap();
        prop_assert_eq!(read_trace(&buf[..]).unwrap(), records);
    }
}

#[test]
fn final_residual_matches_recomputation() {
    let p = builtin::example31();
    let t = solve(&p, &[2.5], &default_config(&p)).unwrap();
    let again = residual(&p, &t.final_point, ActiveTol::default())
        .unwrap()
        .residual;
    assert!((again - t.last().criticality_residual).abs() <= 1e-10);
}

#[test]
fn quad2d_lands_on_pareto_segment() {
    let p = builtin::quad2d();
    let t = solve(&p, &[0.0, 0.0], &default_config(&p)).unwrap();
    assert_eq!(t.status, Status::Converged);
    assert_eq!(t.monotone_violations(), 0);
    let x = &t.final_point;
    assert!((x[0] + x[1] - 1.0).abs() <= 1e-6, "{x:?}");
    assert!((0.0..=1.0).contains(&x[0]));

    // grid oracle: the final point sits next to some weak-Pareto grid point
    let front = pareto_scan_grid(&p, &[-0.5, -0.5], &[1.5, 1.5], 0.01).unwrap();
    assert!(front
        .iter()
        .any(|g| (g[0] - x[0]).abs() <= 0.01 && (g[1] - x[1]).abs() <= 0.01));
    for g in &front {
        assert!(
            (g[0] + g[1] - 1.0).abs() <= 0.02 && g[0] >= -0.01 && g[0] <= 1.01,
            "{g:?}"
        );
    }
    // every weighted sum minimizer (1 - w, w) appears on the front within a grid cell
    for i in 0..=10 {
        let w = i as f64 / 10.0;
        assert!(front
            .iter()
            .any(|g| (g[0] - (1.0 - w)).abs() <= 0.0051 && (g[1] - w).abs() <= 0.0051));
    }
}

#[test]
fn quad2d_from_other_starts() {
    let p = builtin::quad2d();
    let cfg = default_config(&p);
    let bound = p.evaluate(&p.reference_point).unwrap();
    for x0 in [[0.3, 0.2], [1.0, 1.0], [0.6, 0.6], [0.5, 0.3]] {
        assert!(weakly_below(&p.evaluate(&x0).unwrap(), &bound));
        let t = solve(&p, &x0, &cfg).unwrap();
        assert_eq!(t.status, Status::Converged);
        let x = &t.final_point;
        assert!((x[0] + x[1] - 1.0).abs() <= 1e-6, "{x0:?} -> {x:?}");
    }
}
