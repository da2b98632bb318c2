use isqa::problem::{LogisticLoss, QuadraticQuartic, SparseDesignMatrix};
use isqa::verify::{check_gradient, check_hess_vec, fd_suite, FD_GRAD_TOL, FD_HESS_TOL};
use proptest::prelude::*;

#[test]
fn suite_passes() {
    let v = fd_suite(50, 3);
    assert_eq!(v.len(), 100);
    assert!(v.iter().all(|r| r.pass), "{:?}", v.iter().find(|r| !r.pass));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn logistic_derivatives(
        data in proptest::collection::vec(-2.0f64..2.0, 24),
        labels in proptest::collection::vec(prop_oneof![Just(1.0), Just(-1.0)], 6),
        x in proptest::collection::vec(-1.0f64..1.0, 4),
        v in proptest::collection::vec(-1.0f64..1.0, 4),
    ) {
        let a = SparseDesignMatrix::from_dense(6, 4, &data).unwrap();
        let f = LogisticLoss::new(a, labels).unwrap();
        prop_assert!(check_gradient(&f, &x, 1e-6) <= FD_GRAD_TOL);
        prop_assert!(check_hess_vec(&f, &x, &v, 1e-5) <= FD_HESS_TOL);
    }

    #[test]
    fn quartic_derivatives(
        diag in proptest::collection::vec(0.1f64..3.0, 5),
        u in proptest::collection::vec(-1.0f64..1.0, 5),
        w in proptest::collection::vec(0.0f64..2.0, 5),
        x in proptest::collection::vec(-2.0f64..2.0, 5),
        v in proptest::collection::vec(-1.0f64..1.0, 5),
    ) {
        // diag + u u^T is positive semidefinite
        let mut p = vec![0.0; 25];
        for i in 0..5 {
            for j in 0..5 {
                p[i * 5 + j] = u[i] * u[j] + if i == j { diag[i] } else { 0.0 };
            }
        }
        let f = QuadraticQuartic::new(p, vec![0.5; 5], vec![-0.2; 5], w).unwrap();
        prop_assert!(check_gradient(&f, &x, 1e-6) <= FD_GRAD_TOL);
        prop_assert!(check_hess_vec(&f, &x, &v, 1e-5) <= FD_HESS_TOL);
    }
}
