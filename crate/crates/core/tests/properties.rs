use ks_holistic::integrator::{integrate_scheme, IntegrationConfig};
use ks_holistic::rhs::nonlinear_conservative;
use ks_holistic::{
    rhs, Corrections, GridSpec, ModelParams, NormKind, StateVector, TruncationLevel,
};
use proptest::prelude::*;

fn level() -> impl Strategy<Value = TruncationLevel> {
    prop::sample::select(TruncationLevel::ALL.to_vec())
}

fn state(m: usize) -> impl Strategy<Value = StateVector> {
    prop::collection::vec(-10.0f64..10.0, m)
        .prop_map(move |v| StateVector::new(GridSpec::periodic_2pi(m).unwrap(), v).unwrap())
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0, |m: f64, (x, y)| m.max((x - y).abs()))
}

proptest! {
    #[test]
    fn constant_states_are_fixed(c in -10.0f64..10.0, r in 0.0f64..4.0, gamma in 0.0f64..=1.0, lvl in level(), m in 5usize..20) {
        let u = StateVector::constant(GridSpec::periodic_2pi(m).unwrap(), c).unwrap();
        let g = rhs(&u, ModelParams::new(r, gamma).unwrap(), lvl).tendency;
        let bound = 1e-12 * (1.0 + c.abs().powi(3));
        prop_assert!(g.iter().all(|v| v.abs() <= bound));
    }

    #[test]
    fn shift_equivariance(u in state(11), s in -11i64..11, r in 0.0f64..4.0, lvl in level()) {
        let p = ModelParams::coupled(r).unwrap();
        let g = StateVector::new(*u.grid(), rhs(&u, p, lvl).tendency).unwrap();
        let lhs = rhs(&u.shifted(s), p, lvl).tendency;
        prop_assert!(max_diff(&lhs, g.shifted(s).values()) <= 1e-12 * g.norm(NormKind::Linf).max(1.0));
    }

    #[test]
    fn reflection_equivariance(u in state(10), r in 0.0f64..4.0, gamma in 0.0f64..=1.0, lvl in level()) {
        let p = ModelParams::new(r, gamma).unwrap();
        let g = StateVector::new(*u.grid(), rhs(&u, p, lvl).tendency).unwrap();
        let lhs = rhs(&u.reflected_negated(), p, lvl).tendency;
        prop_assert!(max_diff(&lhs, g.reflected_negated().values()) <= 1e-12 * g.norm(NormKind::Linf).max(1.0));
    }

    #[test]
    fn first_correction_is_low_order_model(u in state(8), r in 0.0f64..4.0) {
        let p = ModelParams::coupled(r).unwrap();
        let a = rhs(&u, p, TruncationLevel::FirstCorrection).tendency;
        let b = rhs(&u, p, TruncationLevel::LowOrderEq3).tendency;
        let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        prop_assert!(max_diff(&a, &b) <= 1e-12 * scale);
    }

    #[test]
    fn conservative_form_telescopes(u in state(9)) {
        let sum: f64 = nonlinear_conservative(&u, u.grid()).iter().sum();
        prop_assert!(sum.abs() <= 1e-10);
    }
}

#[test]
fn symmetric_data_stays_symmetric_under_integration() {
    let grid = GridSpec::periodic_2pi(8).unwrap();
    let u0 = grid
        .sample(|x| 10.0 * x.sin() + 2.0 * (2.0 * x).sin())
        .unwrap();
    assert_eq!(
        u0.reflected_negated()
            .values()
            .iter()
            .zip(u0.values())
            .filter(|(a, b)| (*a - *b).abs() > 1e-14)
            .count(),
        0
    );
    let cfg = IntegrationConfig::uniform(0.0, 1.0, 21, 1e-8, 1e-10);
    for level in TruncationLevel::ALL {
        let traj = integrate_scheme(
            &u0,
            ModelParams::coupled(2.0).unwrap(),
            level,
            Corrections::default(),
            &cfg,
        )
        .unwrap();
        assert!(traj.succeeded());
        for s in &traj.states {
            let defect = s
                .difference(&s.reflected_negated())
                .unwrap()
                .norm(NormKind::Linf);
            assert!(
                defect <= 10.0 * 1e-8 * s.norm(NormKind::Linf).max(1.0),
                "{level}: {defect}"
            );
        }
    }
}

#[test]
fn error_shrinks_as_tolerances_tighten() {
    let grid = GridSpec::periodic_2pi(8).unwrap();
    let u0 = grid.sample(|x| 10.0 * x.sin()).unwrap();
    let params = ModelParams::coupled(2.0).unwrap();
    let run = |tol: f64| {
        let cfg = IntegrationConfig::uniform(0.0, 1.0, 11, tol, tol);
        integrate_scheme(
            &u0,
            params,
            TruncationLevel::SecondCorrection,
            Corrections::default(),
            &cfg,
        )
        .unwrap()
    };
    let reference = run(1e-13);
    let errors: Vec<f64> = [1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10]
        .iter()
        .map(|&tol| {
            run(tol)
                .last()
                .unwrap()
                .difference(reference.last().unwrap())
                .unwrap()
                .norm(NormKind::Linf)
        })
        .collect();
    for w in errors.windows(2) {
        assert!(w[1] <= 5.0 * w[0], "{errors:?}");
    }
    assert!(errors[6] < errors[0] * 1e-3, "{errors:?}");
}
