mod common;

use common::*;
use pflow::fields::{curl2, div, dx, grad, perp_grad, Grid2D, ScalarField};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn grad_and_div_are_adjoint(seed in any::<u64>(), nx in 4usize..40, ny in 4usize..40) {
        let g = Grid2D::periodic(nx, ny, 1.3, 0.7).unwrap();
        let f = smooth_scalar(g, seed);
        let w = noise_vector(g, 1.0, seed.wrapping_add(1));
        let a = f.dot(&div(&w));
        let b = grad(&f).dot(&w);
        let scale = f.l2_norm() * w.l2_norm() / g.hx().min(g.hy());
        prop_assert!((a + b).abs() <= 1e-12 * scale);
    }

    #[test]
    fn curl_grad_and_div_perp_vanish(seed in any::<u64>(), n in 4usize..48) {
        let g = Grid2D::periodic(n, n + 3, 2.0, 1.0).unwrap();
        let f = smooth_scalar(g, seed);
        let scale = f.max_abs().max(1e-300) / (g.hx() * g.hy());
        prop_assert!(curl2(&grad(&f)).max_abs() <= 1e-13 * scale);
        prop_assert!(div(&perp_grad(&f)).max_abs() <= 1e-13 * scale);
    }
}

#[test]
fn central_differences_converge_at_second_order() {
    let err = |n: usize| {
        let g = Grid2D::periodic_2pi(n).unwrap();
        let f = ScalarField::from_fn(g, |x, y| (2.0 * x).sin() * y.cos());
        let exact_dx = ScalarField::from_fn(g, |x, y| 2.0 * (2.0 * x).cos() * y.cos());
        let w = perp_grad(&f);
        let exact_curl = ScalarField::from_fn(g, |x, y| 5.0 * (2.0 * x).sin() * y.cos());
        let d = div(&pflow::VectorField2::from_fn(g, |x, y| [x.sin(), y.sin()]));
        let exact_div = ScalarField::from_fn(g, |x, y| x.cos() + y.cos());
        [
            dx(&f).sub(&exact_dx).max_abs(),
            curl2(&w).sub(&exact_curl).max_abs(),
            d.sub(&exact_div).max_abs(),
        ]
    };
    let (a, b) = (err(32), err(64));
    for k in 0..3 {
        assert!(a[k] / b[k] >= 3.5, "{k}: {} {}", a[k], b[k]);
    }
}
