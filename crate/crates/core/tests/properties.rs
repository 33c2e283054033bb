use concavereg_core::design::{self, EigenOptions};
use concavereg_core::penalty::{Family, Penalty};
use concavereg_core::simulate::{gen_instance, BetaSpec, NoiseKind, SigmaSpec};
use concavereg_core::solvers::{self, SolverOptions};
use concavereg_core::verify::{self, Context, Status, VerifyOptions};
use proptest::prelude::*;

fn penalty() -> impl Strategy<Value = Penalty> {
    (0usize..6, 0.05f64..3.0, 0.0f64..1.0).prop_map(|(f, l, u)| match f {
        0 => Penalty::l0(l).unwrap(),
        1 => Penalty::l1(l).unwrap(),
        2 => Penalty::capped_l1(l, 1.0 + 5.0 * u).unwrap(),
        3 => Penalty::mcp(l, 1.01 + 5.0 * u).unwrap(),
        4 => Penalty::scad(l, 2.01 + 5.0 * u).unwrap(),
        _ => Penalty::bridge(l, 0.1 + 0.85 * u).unwrap(),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn prox_is_zero_exactly_below_threshold(p in penalty(), z in -10.0f64..10.0) {
        let ls = p.threshold_level();
        let z = z * ls;
        let tol = if p.family() == Family::Bridge { 1e-8 * ls } else { 0.0 };
        if (z.abs() - ls).abs() > tol {
            prop_assert_eq!(p.scalar_prox(z) == 0.0, z.abs() <= ls);
        }
    }

    #[test]
    fn prox_beats_every_grid_point(p in penalty(), z in -6.0f64..6.0) {
        let z = z * p.threshold_level();
        let f = |t: f64| (z - t) * (z - t) / 2.0 + p.rho(t);
        let t = p.scalar_prox(z);
        for i in 0..=200 {
            prop_assert!(f(t) <= f(z * i as f64 / 200.0) + 1e-10);
        }
    }

    #[test]
    fn numeric_threshold_matches(p in penalty()) {
        let a = p.threshold_level();
        let b = p.threshold_level_numeric();
        prop_assert!((a - b).abs() <= 1e-6 * a, "{} vs {}", a, b);
    }

    #[test]
    fn envelope_sandwich(p in penalty(), t in -10.0f64..10.0) {
        let t = t * p.threshold_level();
        let (lo, hi) = p.envelope_bounds(t);
        let r = p.rho(t);
        prop_assert!(lo <= r + 1e-12 * (1.0 + r) && r <= hi + 1e-12 * (1.0 + r));
    }

    #[test]
    fn delta_bound_dominates_spread_vectors(p in penalty(), a in 0.0f64..6.0, k in 1usize..6, w in prop::collection::vec(0.01f64..1.0, 5)) {
        let a = a * p.threshold_level();
        let ws: f64 = w[..k].iter().sum();
        let total: f64 = w[..k].iter().map(|v| p.rho(v / ws * a * k as f64)).sum();
        prop_assert!(total <= p.delta_bound(a, k) * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn theta_vanishes_at_max_concavity(p in penalty(), t in 0.0f64..8.0) {
        let k = p.max_concavity();
        if k.is_finite() {
            prop_assert!(p.nonconvexity_theta(t * p.lambda(), k) <= 1e-12 * p.lambda());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn instances_are_reproducible_and_consistent(seed in 0u64..10_000, s in 0usize..4, r in 0.0f64..0.7) {
        let gen = || gen_instance(24, 6, s, &SigmaSpec::Toeplitz(r), &BetaSpec::Strong { c: 2.0 }, 0.5, NoiseKind::Gaussian, seed).unwrap();
        let a = gen();
        prop_assert_eq!(&a, &gen());
        prop_assert!(a.x.is_normalized());
        prop_assert_eq!(a.support.len(), s);
        let xb = a.x.apply(&a.beta);
        for i in 0..24 {
            prop_assert!((a.y[i] - xb[i] - a.eps[i]).abs() <= 1e-12 * (1.0 + a.y[i].abs()));
        }
    }

    #[test]
    fn sparse_eigenvalues_are_ordered(seed in 0u64..10_000) {
        let i = gen_instance(20, 6, 1, &SigmaSpec::Equicorrelated(0.3), &BetaSpec::Strong { c: 2.0 }, 1.0, NoiseKind::Gaussian, seed).unwrap();
        let t = design::sparse_eigen_table(&i.x.gram(), 6, &EigenOptions::default()).unwrap();
        for w in t.windows(2) {
            prop_assert!(w[1].kappa_minus <= w[0].kappa_minus + 1e-12);
            prop_assert!(w[1].kappa_plus >= w[0].kappa_plus - 1e-12);
        }
        for e in &t {
            prop_assert!(e.kappa_minus <= 1.0 + 1e-12 && e.kappa_plus >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn certified_l0_solution_is_never_beaten(seed in 0u64..10_000, scale in 0.5f64..3.0) {
        let i = gen_instance(24, 7, 2, &SigmaSpec::Toeplitz(0.3), &BetaSpec::Strong { c: 3.0 }, 0.5, NoiseKind::Gaussian, seed).unwrap();
        let pen = Penalty::l0(scale * 0.3).unwrap();
        let o = SolverOptions::default();
        let g = solvers::global_enumerate(&i.x, &i.y, &pen, None, &o).unwrap();
        prop_assert!(g.certified);
        let lasso = solvers::lasso_cd(&i.x, &i.y, pen.lambda(), &o).unwrap();
        let local = solvers::local_descent(&i.x, &i.y, &pen, &lasso.beta, &o).unwrap();
        for b in [&lasso.beta, &local.beta, &i.beta] {
            prop_assert!(g.objective <= solvers::objective(&i.x, &i.y, &pen, b) + 1e-12);
        }
    }

    // a passing report never hides a failed check, and reports are deterministic
    #[test]
    fn reports_are_consistent(seed in 0u64..10_000, f in 0usize..5) {
        let i = gen_instance(28, 6, 2, &SigmaSpec::Toeplitz(0.2), &BetaSpec::Strong { c: 4.0 }, 0.5, NoiseKind::Gaussian, seed).unwrap();
        let l = 0.35;
        let pen = [Penalty::l0(l), Penalty::l1(l), Penalty::capped_l1(l, 4.0), Penalty::mcp(l, 3.0), Penalty::scad(l, 3.7)][f].clone().unwrap();
        let o = SolverOptions::default();
        let g = solvers::global_enumerate(&i.x, &i.y, &pen, None, &o).unwrap();
        let run = || {
            let mut ctx = Context::new(&i, VerifyOptions::default());
            let mut r = verify::check_estimation_bounds(&mut ctx, &g, &pen, 0.5, &[1.0, 2.0]).unwrap();
            r.extend(verify::check_sparsity_bound(&mut ctx, &g, &pen, 0.5, None).unwrap());
            r.extend(verify::check_lemmas(&mut ctx, &g, &pen, 0.5).unwrap());
            r
        };
        let a = run();
        prop_assert_eq!(format!("{a:?}"), format!("{:?}", run()));
        for r in &a {
            prop_assert!(r.status != Status::Violated, "{:?}", r);
            if r.status == Status::Passed {
                prop_assert!(r.checks.iter().all(|c| c.holds));
                prop_assert!(r.premises.iter().all(|p| p.satisfied));
            }
            prop_assert_eq!(r.passed, r.status != Status::Violated);
        }
    }
}

#[test]
fn tolerance_policy() {
    assert!(verify::within(1.0 + 1e-9, 1.0));
    assert!(!verify::within(1.0 + 1e-7, 1.0));
    assert!(verify::within(1e300, f64::INFINITY));
    assert!(verify::within(1e-9, 0.0));
}
