//! Scaling and Galilean transforms and the Bernoulli residuals.

use crate::error::{Error, Result};
use crate::fields::{grad, integrate, Grid2D, ScalarField, VectorField2};
use crate::par;
use crate::plaplacian::{apply_p_laplacian, Method, PlapConfig};
use crate::pmomentum::PExponent;

/// `α = (γ - 1)/(p + 1 - γ)`.
pub fn scaling_exponent(p: f64, gamma: f64) -> Result<f64> {
    PExponent::new(p)?;
    if !(gamma > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma must exceed 1, got {gamma}"
        )));
    }
    if gamma >= p + 1.0 {
        return Err(Error::InvalidRegime(format!(
            "gamma = {gamma} must be below p + 1 = {}",
            p + 1.0
        )));
    }
    Ok((gamma - 1.0) / (p + 1.0 - gamma))
}

/// `v_λ(x̄, t̄) = λ^α v(λx̄, λ^{α+1}t̄)` applied to a snapshot of `v` at time
/// `t`. The node count is kept, so the new grid has lengths `L/λ` and every
/// node of it is the image of a node of the old one. Returns the field and
/// the rescaled time `t/λ^{α+1}`.
pub fn rescale(
    v: &VectorField2,
    t: f64,
    lambda: f64,
    p: f64,
    gamma: f64,
) -> Result<(VectorField2, f64)> {
    let alpha = scaling_exponent(p, gamma)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let g = v.grid;
    let grid = Grid2D::new(g.nx, g.ny, g.lx / lambda, g.ly / lambda, g.bc)?;
    let s = lambda.powf(alpha);
    let out = VectorField2 {
        grid,
        u: v.u.iter().map(|x| s * x).collect(),
        v: v.v.iter().map(|x| s * x).collect(),
    };
    Ok((out, t / lambda.powf(alpha + 1.0)))
}

/// `B(a) g = |a|^{2-p}(g + ((2-p)/(p-1))(â·g)â)`.
fn b_apply(a: [f64; 2], g: [f64; 2], p: f64) -> [f64; 2] {
    let n = a[0].hypot(a[1]);
    let (ux, uy) = (a[0] / n, a[1] / n);
    let c = (2.0 - p) / (p - 1.0) * (ux * g[0] + uy * g[1]);
    let s = n.powf(2.0 - p);
    [s * (g[0] + c * ux), s * (g[1] + c * uy)]
}

/// `B(a)^{-1} g = |a|^{p-2}(g + (p-2)(â·g)â)`.
fn b_inverse(a: [f64; 2], g: [f64; 2], p: f64) -> [f64; 2] {
    let n = a[0].hypot(a[1]);
    let (ux, uy) = (a[0] / n, a[1] / n);
    let c = (p - 2.0) * (ux * g[0] + uy * g[1]);
    let s = n.powf(p - 2.0);
    [s * (g[0] + c * ux), s * (g[1] + c * uy)]
}

/// `g + B(b)^{-1}(B(a) - B(b)) g`, which maps `B(a)g` to `B(b)^{-1}B(a)g`
/// and is exactly `g` when `a = b`.
fn transfer(a: [f64; 2], b: [f64; 2], g: [f64; 2], p: f64) -> [f64; 2] {
    let (ba, bb) = (b_apply(a, g, p), b_apply(b, g, p));
    let d = b_inverse(b, [ba[0] - bb[0], ba[1] - bb[1]], p);
    [g[0] + d[0], g[1] + d[1]]
}

/// Round trip of the Galilean pressure relation `B(u)∇θ = B(v)∇π` with
/// `u = v + w`: builds `∇θ` from `∇π`, maps it back and returns the largest
/// pointwise discrepancy relative to `‖∇π‖∞`. Points where `|v|` or `|u|`
/// is below `1e-6` of its maximum are left out.
pub fn galilean_check(
    v: &VectorField2,
    grad_pi: &VectorField2,
    w: [f64; 2],
    p: f64,
) -> Result<f64> {
    PExponent::new(p)?;
    if v.grid != grad_pi.grid {
        return Err(Error::ShapeMismatch(
            "velocity and pressure gradient grids differ".into(),
        ));
    }
    let n = v.grid.len();
    let u_at = |k: usize| [v.u[k] + w[0], v.v[k] + w[1]];
    let vmax = par::max(n, |k| v.u[k].hypot(v.v[k]));
    let umax = par::max(n, |k| {
        let u = u_at(k);
        u[0].hypot(u[1])
    });
    let floor_v = 1e-6 * vmax;
    let floor_u = 1e-6 * umax;
    let mask: Vec<usize> = (0..n)
        .filter(|&k| {
            let u = u_at(k);
            v.u[k].hypot(v.v[k]) > floor_v && u[0].hypot(u[1]) > floor_u
        })
        .collect();
    if mask.is_empty() {
        return Err(Error::DegenerateVelocity);
    }
    let scale = grad_pi.max_magnitude();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let errs = par::map_items(&mask, |&k| {
        let (a, b, g) = (v.at(k), u_at(k), grad_pi.at(k));
        let theta = transfer(a, b, g, p);
        let back = transfer(b, a, theta, p);
        (back[0] - g[0]).hypot(back[1] - g[1])
    });
    Ok(errs.into_iter().fold(0.0, f64::max) / scale)
}

/// Residuals of the Bernoulli system for a potential `φ` known at two times
/// `dt` apart: `r1 = ‖φ_t + |∇φ|^q/q + π - c‖₂` with `c` the spatial mean,
/// and `r2 = ‖div(|∇φ|^{q-2}∇φ)‖₂`, both at the midpoint.
pub fn bernoulli_residual(
    phi_prev: &ScalarField,
    phi_next: &ScalarField,
    pi: &ScalarField,
    p: f64,
    dt: f64,
) -> Result<(f64, f64)> {
    let e = PExponent::new(p)?;
    if phi_prev.grid != phi_next.grid || phi_prev.grid != pi.grid {
        return Err(Error::ShapeMismatch(
            "potential and pressure grids differ".into(),
        ));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let q = e.q();
    let g = pi.grid;
    let phi = ScalarField {
        grid: g,
        values: par::collect(g.len(), |k| 0.5 * (phi_prev.values[k] + phi_next.values[k])),
    };
    let gp = grad(&phi);
    let mut r1 = ScalarField {
        grid: g,
        values: par::collect(g.len(), |k| {
            let s = gp.u[k].hypot(gp.v[k]);
            (phi_next.values[k] - phi_prev.values[k]) / dt + s.powf(q) / q + pi.values[k]
        }),
    };
    let c = integrate(&r1) / g.area();
    r1.values.iter_mut().for_each(|x| *x -= c);
    let cfg = PlapConfig {
        delta: 0.0,
        tol: 1e-10,
        max_iter: 1,
        method: Method::NewtonLS,
    };
    let r2 = apply_p_laplacian(&phi, e.dual(), &cfg);
    Ok((r1.l2_norm(), r2.l2_norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scaling_exponents() {
        assert_eq!(scaling_exponent(2.0, 2.0).unwrap(), 1.0);
        assert_eq!(scaling_exponent(3.0, 3.0).unwrap(), 2.0);
        assert!(matches!(
            scaling_exponent(3.0, 4.0),
            Err(Error::InvalidRegime(_))
        ));
    }

    #[test]
    fn rescale_identity_and_classical_case() {
        let g = Grid2D::periodic_2pi(16).unwrap();
        let v = VectorField2::from_fn(g, |x, y| [x.sin(), y.cos()]);
        let (same, t) = rescale(&v, 0.7, 1.0, 3.0, 2.5).unwrap();
        assert_eq!((same, t), (v.clone(), 0.7));
        let (w, t2) = rescale(&v, 0.8, 2.0, 2.0, 2.0).unwrap();
        assert_eq!(t2, 0.2);
        assert_eq!(w.grid.lx, g.lx / 2.0);
        assert_eq!(w.u[5], 2.0 * v.u[5]);
    }

    fn random_fields(seed: u64) -> (VectorField2, VectorField2) {
        let g = Grid2D::periodic(24, 24, 1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let tau = std::f64::consts::TAU;
        let v = VectorField2::from_fn(g, |x, y| {
            [
                0.3 + c[0] * (tau * y).sin(),
                c[1] * (tau * x).cos() + c[2] * (tau * (x + y)).sin(),
            ]
        });
        let gp = VectorField2::from_fn(g, |x, y| {
            [c[3] * (tau * x).cos() + c[4], c[5] * (tau * y).sin()]
        });
        (v, gp)
    }

    #[test]
    fn galilean_round_trip() {
        let (v, gp) = random_fields(3);
        assert_eq!(galilean_check(&v, &gp, [0.0, 0.0], 3.0).unwrap(), 0.0);
        assert!(galilean_check(&v, &gp, [1.0, -0.5], 2.0).unwrap() <= 1e-14);
        for seed in 0..5 {
            let (v, gp) = random_fields(seed);
            assert!(galilean_check(&v, &gp, [1.0, 0.0], 3.0).unwrap() <= 1e-10);
            assert!(galilean_check(&v, &gp, [0.2, 0.4], 1.5).unwrap() <= 1e-10);
        }
        let z = VectorField2::zeros(v.grid);
        assert_eq!(
            galilean_check(&z, &gp, [0.0, 0.0], 3.0),
            Err(Error::DegenerateVelocity)
        );
    }

    #[test]
    fn tensor_maps_are_inverse() {
        let a = [0.3, -1.2];
        let g = [0.7, 0.1];
        for p in [1.3, 2.0, 3.0, 5.0] {
            let back = b_inverse(a, b_apply(a, g, p), p);
            assert!((back[0] - g[0]).abs() < 1e-14 && (back[1] - g[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn bernoulli_trivial_cases() {
        let g = Grid2D::dirichlet(20, 20, 1.0, 1.0).unwrap();
        let z = ScalarField::zeros(g);
        assert_eq!(
            bernoulli_residual(&z, &z, &z, 3.0, 0.1).unwrap(),
            (0.0, 0.0)
        );
        let a = [0.6, -0.3];
        let p = 3.0;
        let q = 1.5;
        let phi = ScalarField::from_fn(g, |x, y| a[0] * x + a[1] * y);
        let pi = ScalarField::constant(g, 2.0 - a[0].hypot(a[1]).powf(q) / q);
        let (r1, r2) = bernoulli_residual(&phi, &phi, &pi, p, 0.1).unwrap();
        assert!(r1 <= 1e-10 && r2 <= 1e-10, "{r1} {r2}");
    }

    #[test]
    fn bernoulli_p2_uses_the_laplacian() {
        let g = Grid2D::periodic_2pi(32).unwrap();
        let phi = ScalarField::from_fn(g, |x, y| x.sin() * y.cos());
        let (_, r2) = bernoulli_residual(&phi, &phi, &ScalarField::zeros(g), 2.0, 1.0).unwrap();
        let lap = apply_p_laplacian(&phi, PExponent::new(2.0).unwrap(), &PlapConfig::default());
        assert!((r2 - lap.l2_norm()).abs() < 1e-13);
    }
}
