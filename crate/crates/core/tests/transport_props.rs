mod common;

use common::*;
use pflow::fields::{integrate, perp_grad};
use pflow::transport::{advect_scalar, Scheme};
use pflow::Grid2D;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn upwind_flux_form_conserves_the_integral(seed in any::<u64>(), cfl in 0.05f64..0.8) {
        let g = Grid2D::periodic(32, 24, 1.0, 0.75).unwrap();
        let v = perp_grad(&smooth_scalar(g, seed));
        let w = smooth_scalar(g, seed ^ 7);
        let dt = cfl * g.hx().min(g.hy()) / v.max_magnitude().max(1e-12);
        let next = advect_scalar(&w, &v, dt, Scheme::Upwind3).unwrap();
        let scale = w.values.iter().map(|x| x.abs()).sum::<f64>() * g.cell_area();
        prop_assert!((integrate(&next) - integrate(&w)).abs() <= 1e-12 * scale);
    }

    #[test]
    fn semi_lagrangian_overshoot_is_bounded(seed in any::<u64>(), cfl in 0.1f64..3.0) {
        let g = Grid2D::periodic(32, 32, 1.0, 1.0).unwrap();
        let v = perp_grad(&smooth_scalar(g, seed));
        let w = smooth_scalar(g, seed ^ 3);
        let dt = cfl * g.hx() / v.max_magnitude().max(1e-12);
        let next = advect_scalar(&w, &v, dt, Scheme::SemiLagrangian).unwrap();
        let (lo, hi) = w.values.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
        let eps = 0.05 * (hi - lo);
        prop_assert!(next.values.iter().all(|&x| x >= lo - eps && x <= hi + eps));
    }
}
