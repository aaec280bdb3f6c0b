use hyperint::instances::{random_family_instance, FamilyKind};
use hyperint::neumann::{self, NeumannParams, NeumannState};
use hyperint::rng::SplitMix64;
use hyperint::surface::SURFACE_TOL;
use hyperint::symplectic::involutivity_residual;
use proptest::prelude::*;

fn kind(i: usize) -> FamilyKind {
    FamilyKind::defaults()[i]
}

fn max_diff(a: &[num_complex::Complex64], b: &[num_complex::Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn points_determine_u(seed in any::<u64>(), k in 0usize..5) {
        let inst = random_family_instance(kind(k), &mut SplitMix64::new(seed)).unwrap();
        for pt in &inst.config.points {
            prop_assert!(inst.family.surface_residual(pt) < SURFACE_TOL);
        }
        let u = inst.family.points_to_u(&inst.config).unwrap();
        let scale = inst.u.iter().map(|v| v.norm()).fold(1.0, f64::max);
        prop_assert!(max_diff(&u, &inst.u) / scale < 1e-9);
    }

    #[test]
    fn reordering_points_keeps_u(seed in any::<u64>(), k in 0usize..5) {
        let inst = random_family_instance(kind(k), &mut SplitMix64::new(seed)).unwrap();
        let mut config = inst.config.clone();
        config.points.reverse();
        let u = inst.family.points_to_u(&config).unwrap();
        let scale = inst.u.iter().map(|v| v.norm()).fold(1.0, f64::max);
        prop_assert!(max_diff(&u, &inst.u) / scale < 1e-9);
    }

    #[test]
    fn hamiltonians_commute(seed in any::<u64>(), k in 0usize..5) {
        let inst = random_family_instance(kind(k), &mut SplitMix64::new(seed)).unwrap();
        prop_assert!(involutivity_residual(&inst.family, &inst.config, 1e-5).unwrap() < 1e-9);
    }

    #[test]
    fn neumann_state_invariants(seed in any::<u64>(), r in 0.5f64..3.0, speed in 0.2f64..2.0) {
        let params = NeumannParams::new(vec![0.3, 1.1, 2.0, 3.4], r).unwrap();
        let state = neumann::random_state(&params, &mut SplitMix64::new(seed), speed).unwrap();
        let (a, b) = state.constraint_drift(&params);
        prop_assert!(a.max(b) < 1e-10 * r * r);

        let f = neumann::uhlenbeck_integrals(&params, &state);
        prop_assert!((f.iter().sum::<f64>() - r * r).abs() < 1e-10 * r * r);
        let h = neumann::energy(&params, &state);
        let half_cf: f64 = 0.5 * params.c().iter().zip(&f).map(|(c, v)| c * v).sum::<f64>();
        prop_assert!((h - half_cf).abs() < 1e-10 * h.abs().max(1.0));

        // separated roots interlace the constants
        let sep = neumann::separated_points(&params, &state).unwrap();
        let mut xs: Vec<f64> = sep.config.xs().iter().map(|x| x.re).collect();
        xs.sort_by(f64::total_cmp);
        for (j, x) in xs.iter().enumerate() {
            prop_assert!(params.c()[j] <= *x && *x <= params.c()[j + 1]);
        }
    }

    #[test]
    fn projection_is_idempotent(q in prop::collection::vec(-2.0f64..2.0, 4), p in prop::collection::vec(-2.0f64..2.0, 4)) {
        prop_assume!(q.iter().map(|v| v * v).sum::<f64>() > 1e-2);
        let params = NeumannParams::new(vec![0.0, 1.0, 2.5, 4.0], 1.5).unwrap();
        let once = NeumannState { q, p }.project(&params);
        let (a, b) = once.constraint_drift(&params);
        prop_assert!(a.max(b) < 1e-12);
        let twice = once.project(&params);
        for (x, y) in once.q.iter().chain(&once.p).zip(twice.q.iter().chain(&twice.p)) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }
}
