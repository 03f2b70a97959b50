use num_complex::Complex64;
use proptest::prelude::*;

use rslab_core::kernel::log_space;
use rslab_core::quad::exp_sinh;
use rslab_core::{validate_cm, CombinedKernel, KernelSpec, RelaxationEvaluator};

fn exp_sum() -> impl Strategy<Value = KernelSpec> {
    prop::collection::vec((0.01f64..5.0, 0.05f64..50.0), 1..5).prop_map(|terms| {
        let (w, r): (Vec<f64>, Vec<f64>) = terms.into_iter().unzip();
        KernelSpec::exp_sum(w, r).unwrap()
    })
}

fn fractional() -> impl Strategy<Value = KernelSpec> {
    (0.1f64..0.9, 0.1f64..3.0).prop_map(|(a, w)| KernelSpec::fractional(a, w).unwrap())
}

fn any_kernel() -> impl Strategy<Value = KernelSpec> {
    prop_oneof![Just(KernelSpec::Zero), exp_sum(), fractional()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exp_sums_are_completely_monotone(k in exp_sum()) {
        let report = validate_cm(&k, &log_space(1e-2, 10.0, 40), 4).unwrap();
        prop_assert!(report.passed(), "{:?}", report.violations);
    }

    #[test]
    fn bernstein_transform_is_positive_increasing_concave(k in any_kernel()) {
        let m = CombinedKernel::new(k);
        let lams = log_space(1e-2, 1e3, 60);
        let phi: Vec<f64> = lams
            .iter()
            .map(|&l| m.phi_m(Complex64::new(l, 0.0)).unwrap().re)
            .collect();
        prop_assert!(phi.iter().all(|&p| p > 0.0));
        prop_assert!(phi.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12)));
        // concavity: slopes decrease along the grid
        let slopes: Vec<f64> = phi
            .windows(2)
            .zip(lams.windows(2))
            .map(|(p, l)| (p[1] - p[0]) / (l[1] - l[0]))
            .collect();
        prop_assert!(slopes.windows(2).all(|s| s[1] <= s[0] * (1.0 + 1e-9) + 1e-12));
    }

    #[test]
    fn laplace_of_one_conv_is_mhat_over_lambda(k in any_kernel(), lam in 0.2f64..20.0) {
        let m = CombinedKernel::new(k);
        let direct = exp_sinh(0.0, 1e-12, |t| (-lam * t).exp() * m.one_conv(t));
        let want = m.mhat(Complex64::new(lam, 0.0)).unwrap().re / lam;
        prop_assert!((direct - want).abs() <= 1e-7 * want, "{direct} vs {want}");
    }

    #[test]
    fn relaxation_is_in_unit_interval_and_nonincreasing(k in any_kernel(), mu in 1e-3f64..1e3) {
        let ev = RelaxationEvaluator::new(k);
        let s: Vec<f64> = log_space(1e-3, 50.0, 40).iter().map(|&t| ev.s(t, mu).unwrap()).collect();
        prop_assert!(s.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!(s.windows(2).all(|w| w[1] <= w[0] + 2e-9));
    }

    #[test]
    fn relaxation_decreases_in_mu(k in any_kernel(), t in 1e-2f64..10.0, mu in 1e-2f64..1e2) {
        let ev = RelaxationEvaluator::new(k);
        prop_assert!(ev.s(t, 2.0 * mu).unwrap() <= ev.s(t, mu).unwrap() + 2e-9);
    }
}
