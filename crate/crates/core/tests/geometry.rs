//! Curvature algebra on random second fundamental forms, and finite-difference
//! Hessians against analytic ones.

use intinv::geom::{default_hessian_step, finite_difference_hessians};
use intinv::{curvature_summary, parse_manifold, third_form_operator, SecondFundamentalForm};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn symmetric(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(-2.0..2.0f64, n * n).prop_map(move |v| {
        let m = DMatrix::from_vec(n, n, v);
        (&m + m.transpose()) * 0.5
    })
}

fn sff() -> impl Strategy<Value = SecondFundamentalForm> {
    (1usize..=4, 1usize..=3).prop_flat_map(|(n, k)| {
        proptest::collection::vec(symmetric(n), k).prop_map(|s| SecondFundamentalForm::new(s).unwrap())
    })
}

fn vector(n: usize) -> impl Strategy<Value = DVector<f64>> {
    proptest::collection::vec(-1.0..1.0f64, n).prop_map(DVector::from_vec)
}

proptest! {
    #[test]
    fn traces_of_the_third_form(s in sff()) {
        let c = curvature_summary(&s);
        prop_assert!((&c.tr_perp_iii - (&c.weingarten_h - &c.ricci)).amax() <= 1e-10);
        prop_assert!((c.tr_iii - (c.mean_curvature_sq() - c.scalar)).abs() <= 1e-10);
        prop_assert!((c.tr_iii - c.tr_par_iii.trace()).abs() <= 1e-10);
        for m in [&c.weingarten_h, &c.ricci, &c.tr_perp_iii, &c.tr_par_iii] {
            prop_assert!((m - m.transpose()).amax() <= 1e-12);
        }
    }

    #[test]
    fn normal_trace_is_the_weingarten_square_sum(s in sff()) {
        let c = curvature_summary(&s);
        let k = s.codim();
        let direct = (0..k).fold(DMatrix::zeros(s.dim(), s.dim()), |acc, j| {
            let e = DVector::from_fn(k, |i, _| if i == j { 1.0 } else { 0.0 });
            let w = s.weingarten(&e);
            acc + &w * &w
        });
        prop_assert!((direct - c.tr_perp_iii).amax() <= 1e-12);
    }

    #[test]
    fn third_form_is_bilinear(
        (s, x, y, z) in sff().prop_flat_map(|s| {
            let n = s.dim();
            (Just(s), vector(n), vector(n), vector(n))
        }),
        a in -3.0..3.0f64,
        b in -3.0..3.0f64,
    ) {
        let lhs = third_form_operator(&s, &(&x * a + &z * b), &y);
        let rhs = third_form_operator(&s, &x, &y) * a + third_form_operator(&s, &z, &y) * b;
        prop_assert!((lhs - rhs).amax() <= 1e-12);
    }
}

#[test]
fn finite_difference_hessians_match_analytic_ones() {
    for id in ["sphere", "paraboloid(1,2)", "codim2", "sphere(3, 2)", "quadratic(2, 1,0.5,0.5,-1, 0,1,1,0)"] {
        let chart = parse_manifold(id).unwrap();
        let f = chart.function();
        let exact = f.hessians_at_origin().expect("zoo charts carry analytic Hessians");
        let fd = finite_difference_hessians(f, default_hessian_step());
        for (a, b) in exact.iter().zip(&fd) {
            assert!((a - b).amax() <= 1e-6, "{id}: {}", (a - b).amax());
        }
    }
}

#[test]
fn plane_is_flat() {
    let c = curvature_summary(&intinv::second_fundamental_form(&parse_manifold("plane").unwrap()).unwrap());
    assert_eq!(c.scalar, 0.0);
    assert_eq!(c.tr_iii, 0.0);
}
