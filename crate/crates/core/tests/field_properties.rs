use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use rslab_core::dynamics::HistoryFunction;
use rslab_core::spectral::{apply_s, dissipation_pairing, lp_norm};
use rslab_core::{metric_rho, truncate_f, Field, KernelSpec, Nonlinearity, RelaxationEvaluator, TorusGrid};

fn grid() -> impl Strategy<Value = TorusGrid> {
    prop_oneof![
        (prop_oneof![Just(16usize), Just(32), Just(64)], 0.5f64..20.0)
            .prop_map(|(n, l)| TorusGrid::new(1, n, l).unwrap()),
        (prop_oneof![Just(8usize), Just(16)], 0.5f64..10.0).prop_map(|(n, l)| TorusGrid::new(2, n, l).unwrap()),
    ]
}

fn field() -> impl Strategy<Value = Field> {
    (grid(), any::<u64>(), -2.0f64..2.0, 0.1f64..5.0).prop_map(|(g, seed, mean, amp)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Field::smooth_random(g, 6, 1.0, mean, || amp * rng.sample::<f64, _>(StandardNormal))
    })
}

fn kernel() -> impl Strategy<Value = KernelSpec> {
    prop_oneof![
        Just(KernelSpec::Zero),
        (0.1f64..0.9).prop_map(|a| KernelSpec::fractional(a, 1.0).unwrap()),
        (0.1f64..3.0, 0.1f64..20.0).prop_map(|(w, r)| KernelSpec::exp_sum(vec![w], vec![r]).unwrap()),
    ]
}

fn constant_history(g: TorusGrid, c: f64) -> HistoryFunction {
    HistoryFunction::constant(Field::constant(g, c), 8.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn resolvent_is_non_expansive(v in field(), k in kernel(), t in 1e-3f64..10.0) {
        let ev = RelaxationEvaluator::new(k);
        let sv = apply_s(&ev, t, &v).unwrap();
        prop_assert!(sv.l2() <= v.l2() * (1.0 + 1e-12));
    }

    #[test]
    fn resolvent_keeps_the_mean(v in field(), k in kernel(), t in 1e-3f64..10.0) {
        let ev = RelaxationEvaluator::new(k);
        let sv = apply_s(&ev, t, &v).unwrap();
        prop_assert!((sv.mean() - v.mean()).abs() <= 1e-12 * (1.0 + v.max_abs()));
    }

    #[test]
    fn self_pairing_is_the_pth_power(v in field(), p in prop_oneof![Just(2u32), Just(4), Just(6)]) {
        let pairing = dissipation_pairing(&v, &v, p).unwrap();
        let norm = lp_norm(&v, p).unwrap().powi(p as i32);
        prop_assert!((pairing - norm).abs() <= 1e-10 * norm.max(1e-300));
    }

    #[test]
    fn spectrum_round_trips(v in field()) {
        let back = Field::from_spectrum(*v.grid(), v.spectrum().to_vec()).unwrap();
        prop_assert!(back.l2_dist(&v).unwrap() <= 1e-12 * (1.0 + v.l2()));
        prop_assert!(v.hermitian_defect() <= 1e-12);
    }

    #[test]
    fn metric_is_bounded_symmetric_and_triangular(a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0) {
        let g = TorusGrid::new(1, 8, 1.0).unwrap();
        let (x, y, z) = (constant_history(g, a), constant_history(g, b), constant_history(g, c));
        let xy = metric_rho(&x, &y, 6).unwrap().value;
        let yx = metric_rho(&y, &x, 6).unwrap().value;
        let yz = metric_rho(&y, &z, 6).unwrap().value;
        let xz = metric_rho(&x, &z, 6).unwrap().value;
        prop_assert!((0.0..1.0).contains(&xy));
        prop_assert_eq!(xy, yx);
        prop_assert!(xz <= xy + yz + 1e-15);
        prop_assert_eq!(metric_rho(&x, &x, 6).unwrap().value, 0.0);
    }

    #[test]
    fn truncation_agrees_inside_and_retracts_outside(v in field(), radius in 0.1f64..10.0) {
        let f = Nonlinearity::cubic();
        let fr = truncate_f(&f, radius).unwrap();
        let got = fr.apply(&v);
        if v.l2() <= radius {
            prop_assert_eq!(got, f.apply(&v));
        } else {
            let retracted = v.scale(radius / v.l2());
            prop_assert!((retracted.l2() - radius).abs() <= 1e-12 * radius);
            prop_assert_eq!(got, f.apply(&retracted));
        }
    }

    #[test]
    fn truncated_map_is_lipschitz_on_the_grid(u in field(), seed in any::<u64>(), radius in 0.2f64..3.0) {
        let g = *u.grid();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = Field::smooth_random(g, 6, 1.0, 0.0, || rng.sample::<f64, _>(StandardNormal));
        let fr = Nonlinearity::cubic().truncated_on(radius, &g).unwrap();
        let l = fr.lipschitz().unwrap();
        let lhs = fr.apply(&u).l2_dist(&fr.apply(&w)).unwrap();
        prop_assert!(lhs <= l * u.l2_dist(&w).unwrap() * (1.0 + 1e-9) + 1e-12);
    }
}

#[test]
fn resolvent_history_starts_at_initial_field() {
    let g = TorusGrid::new(1, 16, 1.0).unwrap();
    let u0 = Field::from_fn(g, |x, _| x.sin());
    let ev = Arc::new(RelaxationEvaluator::new(KernelSpec::fractional(0.5, 1.0).unwrap()));
    let phi = HistoryFunction::resolvent(ev, u0.clone());
    assert!(phi.eval(0.0).unwrap().l2_dist(&u0).unwrap() < 1e-14);
}
