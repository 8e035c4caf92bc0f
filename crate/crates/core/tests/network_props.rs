mod common;

use common::{fd_activations, fd_jacobian_wrt_w, random_instance, relative_error};
use genrank::linalg::{rank_float, TolerancePolicy};
use genrank::network::{
    capacity_verdict, full_jacobian, jacobian_wrt_w, rank_at_initialization, standard_normal_matrix, Activation,
    CapacityReason, InitConfig,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn jacobian_matches_central_differences(d in 1usize..5, m in 1usize..5, n in 1usize..7, seed in any::<u64>(), which in 0usize..5) {
        let act = &fd_activations()[which];
        let (p, x) = random_instance(d, m, n, 0.5, seed);
        let jac = jacobian_wrt_w(&p, &x, act).unwrap();
        let fd = fd_jacobian_wrt_w(&p, &x, act, 1e-5);
        prop_assert!(relative_error(&jac, &fd) < 1e-5, "{act}: {}", relative_error(&jac, &fd));
    }

    #[test]
    fn jacobian_rank_bounded_by_shape(d in 1usize..5, m in 1usize..5, n in 1usize..12, seed in any::<u64>()) {
        let (p, x) = random_instance(d, m, n, 1.0, seed);
        let j = jacobian_wrt_w(&p, &x, &Activation::Tanh).unwrap();
        prop_assert!(rank_float(&j, TolerancePolicy::default()).unwrap().rank <= (m * d).min(n));
    }

    #[test]
    fn verdict_ignores_data_scale(m in 1usize..40, n in 1usize..60, d in 1usize..10) {
        let v = capacity_verdict(m, n, d, &Activation::Tanh);
        prop_assert_eq!(v.surjective_predicted, v.reason == CapacityReason::WidthSufficient);
        prop_assert_eq!(v.surjective_predicted, m * d >= 2 * n && m % 2 == 0);
    }
}

// Half-width grid with md >= 2n: the rank test at initialization should
// reach n for nearly every seed.
#[test]
fn half_width_rank_test_reaches_n() {
    let cfg = InitConfig::default();
    let mut total = 0;
    let mut full = 0;
    for d in 2..=4usize {
        for n in 2..=8usize {
            let m = (2 * n).div_ceil(d);
            for s in 0..10u64 {
                let x = standard_normal_matrix(d, n, 7000 + s * 31 + n as u64);
                let r = rank_at_initialization(&x, m, &Activation::Tanh, s, &cfg).unwrap();
                total += 1;
                full += usize::from(r.rank == n);
            }
        }
    }
    assert!(full * 100 >= 95 * total, "{full}/{total}");
}

#[test]
fn full_jacobian_has_all_parameter_rows() {
    let (p, x) = random_instance(3, 4, 5, 0.5, 99);
    let j = full_jacobian(&p, &x, &Activation::Gelu).unwrap();
    assert_eq!(j.shape(), (3 * 4 + 8, 5));
}
