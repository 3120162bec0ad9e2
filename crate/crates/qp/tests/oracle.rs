//! Cross-checks of the interior-point solver against the independent
//! oracles in `support`.

mod support;

use ldesmarket_qp::{solve, verify_kkt, ConvexQP, Sense, SolveOptions, Status};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::{qp_program, random_cases, random_qp};

#[test]
fn random_instances_match_oracles() {
    let opts = SolveOptions::default();
    let cases = random_cases(20251019, &opts);
    assert_eq!(cases.len(), 50);
    for case in &cases {
        let res = &case.result;
        assert_eq!(res.status, Status::Optimal);
        assert!(case.objective_matches(1e-7), "{} objective {} vs oracle {}", case.kind, res.objective, case.oracle);
        assert!(case.kkt_passes);
        let rep = verify_kkt(&case.program, res);
        assert!(rep.agrees_with(&res.residuals, 1e-13), "{:?} vs {:?}", rep.residuals, res.residuals);
        if case.kind == "LP" {
            // duals agree where the simplex optimum is dual nondegenerate
            let duals = &case.oracle_duals;
            let nondegenerate = duals.iter().all(|d| d.abs() > 1e-6 || *d == 0.0);
            if nondegenerate && res.primal.iter().filter(|&&x| x > 1e-6).count() == duals.iter().filter(|&&d| d > 1e-6).count() {
                for (y, d) in res.duals.iter().zip(duals) {
                    assert!((y - d).abs() < 1e-5, "dual {y} vs {d}");
                }
            }
        }
    }
}

#[test]
fn duplicated_row_splits_its_dual() {
    // max x + 2y s.t. x + y <= 4, y <= 3
    let build = |dup: bool| {
        let mut qp = ConvexQP::new();
        let x = qp.add_var(1.0, f64::INFINITY);
        let y = qp.add_var(2.0, f64::INFINITY);
        qp.add_constraint(vec![(x, 1.0), (y, 1.0)], Sense::Le, 4.0);
        if dup {
            qp.add_constraint(vec![(x, 1.0), (y, 1.0)], Sense::Le, 4.0);
        }
        qp.add_constraint(vec![(y, 1.0)], Sense::Le, 3.0);
        qp
    };
    let single = solve(&build(false), &SolveOptions::default()).unwrap();
    let double = solve(&build(true), &SolveOptions::default()).unwrap();
    assert_eq!(double.status, Status::Optimal);
    assert!((single.objective - double.objective).abs() < 1e-7);
    assert!((single.duals[0] - 1.0).abs() < 1e-6);
    assert!((double.duals[0] + double.duals[1] - single.duals[0]).abs() < 1e-6);

    // same with equality rows: rank-deficient constraint matrix
    let mut qp = ConvexQP::new();
    let x = qp.add_var(1.0, f64::INFINITY);
    let y = qp.add_var(2.0, 3.0);
    qp.add_constraint(vec![(x, 1.0), (y, 1.0)], Sense::Eq, 4.0);
    qp.add_constraint(vec![(x, 1.0), (y, 1.0)], Sense::Eq, 4.0);
    let r = solve(&qp, &SolveOptions::default()).unwrap();
    assert_eq!(r.status, Status::Optimal);
    assert!((r.objective - 7.0).abs() < 1e-7);
    assert!((r.duals[0] + r.duals[1] - 1.0).abs() < 1e-6);
}

#[test]
fn objective_sandwich_and_determinism() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let qp = qp_program(&random_qp(&mut rng), 5.0);
        let opts = SolveOptions::default();
        let r1 = solve(&qp, &opts).unwrap();
        let r2 = solve(&qp, &opts).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(r1.status, Status::Optimal);
        assert!((r1.objective - r1.dual_objective).abs() <= opts.tolerance * (1.0 + r1.objective.abs()));
    }
}

#[test]
fn scaling_off_still_converges() {
    let mut qp = ConvexQP::new();
    let x = qp.add_var(2.0, f64::INFINITY);
    qp.add_quadratic(x, x, -2.0);
    let y = qp.add_var(1.0, f64::INFINITY);
    qp.add_constraint(vec![(x, 1.0), (y, 1.0)], Sense::Le, 3.0);
    let opts = SolveOptions { scaling: false, ..Default::default() };
    let r = solve(&qp, &opts).unwrap();
    assert_eq!(r.status, Status::Optimal);
    // row dual is 1 while y > 0, so 2 - 2x = 1
    assert!((r.primal[0] - 0.5).abs() < 1e-6 && (r.primal[1] - 2.5).abs() < 1e-6);
    assert!((r.duals[0] - 1.0).abs() < 1e-6);
}

#[test]
fn dimension_mismatch_is_rejected() {
    let mut qp = ConvexQP::new();
    qp.add_var(1.0, f64::INFINITY);
    qp.add_constraint(vec![(3, 1.0)], Sense::Le, 1.0);
    assert!(solve(&qp, &SolveOptions::default()).is_err());
}
