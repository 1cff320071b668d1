//! The degenerate elliptic core.
//!
//! All operators are built from the collocated central stencils of
//! [`crate::fields`], so `apply_p_laplacian(ψ) = curl2(p_power(perp_grad ψ))`
//! holds discretely and the energy `J` has `apply_p_laplacian - ω` as its
//! exact discrete gradient.

mod solver;

pub use solver::{solve_p_poisson, PLaplaceSolver, SolveStats};

use crate::error::{Error, Result};
use crate::fields::{div, dx, dy, grad, ScalarField, VectorField2};
use crate::par;
use crate::pmomentum::PExponent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Damped Newton with matrix-free preconditioned CG and Armijo
    /// backtracking on the energy.
    NewtonLS,
    /// Preconditioned nonlinear conjugate gradients (Polak-Ribière+).
    NCG,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlapConfig {
    /// Regularisation: `|∇ψ|` is replaced by `sqrt(|∇ψ|² + δ²)`.
    pub delta: f64,
    /// Relative residual tolerance.
    pub tol: f64,
    pub max_iter: usize,
    pub method: Method,
}

impl Default for PlapConfig {
    fn default() -> Self {
        Self {
            delta: 1e-8,
            tol: 1e-10,
            max_iter: 200,
            method: Method::NewtonLS,
        }
    }
}

impl PlapConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter < 1 {
            return Err(Error::InvalidParameter(
                "max_iter must be at least 1".into(),
            ));
        }
        if !(self.delta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must be >= 0, got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

/// `x^e` for `x ≥ 0`. Quarter-integer exponents avoid `powf`.
#[inline]
pub(crate) fn pow_fast(x: f64, e: f64) -> f64 {
    let n4 = 4.0 * e;
    if n4.fract() != 0.0 || n4.abs() > 64.0 {
        return x.powf(e);
    }
    let n = n4 as i32;
    let (k, j) = (n.abs() / 4, n.abs() % 4);
    let r = x.sqrt();
    let frac = match j {
        0 => 1.0,
        1 => r.sqrt(),
        2 => r,
        _ => r * r.sqrt(),
    };
    let v = x.powi(k) * frac;
    if n < 0 {
        1.0 / v
    } else {
        v
    }
}

/// `(|g|² + δ²)^{(r-2)/2}`, with the zero-gradient singularity removed.
#[inline]
pub(crate) fn coefficient(g2: f64, delta: f64, r: f64) -> f64 {
    let s2 = g2 + delta * delta;
    if s2 == 0.0 {
        // Flux vanishes there anyway; any finite value works.
        return 0.0;
    }
    if r == 2.0 {
        1.0
    } else {
        pow_fast(s2, 0.5 * (r - 2.0))
    }
}

/// Regularised flux `(|∇ψ|² + δ²)^{(p-2)/2} ∇ψ`.
pub(crate) fn p_flux(psi: &ScalarField, p: f64, delta: f64) -> VectorField2 {
    let mut g = grad(psi);
    let n = g.grid.len();
    let coef = par::collect(n, |k| {
        coefficient(g.u[k] * g.u[k] + g.v[k] * g.v[k], delta, p)
    });
    g.u.iter_mut().zip(&coef).for_each(|(x, c)| *x *= c);
    g.v.iter_mut().zip(&coef).for_each(|(x, c)| *x *= c);
    g
}

/// `-div((|∇ψ|² + δ²)^{(p-2)/2} ∇ψ)`, the (negative) p-Laplacian.
pub fn apply_p_laplacian(psi: &ScalarField, p: PExponent, cfg: &PlapConfig) -> ScalarField {
    let mut out = div(&p_flux(psi, p.p(), cfg.delta));
    out.values.iter_mut().for_each(|x| *x = -*x);
    out
}

fn energy_value(psi: &ScalarField, omega: &ScalarField, p: f64, delta: f64) -> f64 {
    let g = grad(psi);
    let n = g.grid.len();
    let d2 = delta * delta;
    let s = par::sum(n, g.grid.nx, |k| {
        let s2 = g.u[k] * g.u[k] + g.v[k] * g.v[k] + d2;
        pow_fast(s2, 0.5 * p) / p - omega.values[k] * psi.values[k]
    });
    s * g.grid.cell_area()
}

pub(crate) fn source_mean_check(omega: &ScalarField) -> Result<()> {
    let mean_integral = crate::fields::integrate(omega);
    let l1: f64 = par::sum(omega.grid.len(), omega.grid.nx, |k| omega.values[k].abs())
        * omega.grid.cell_area();
    let tol = 1e-10 * l1;
    if mean_integral.abs() > tol {
        return Err(Error::NonZeroMeanSource {
            mean: mean_integral / omega.grid.area(),
            tol,
        });
    }
    Ok(())
}

/// Energy `J(ψ) = Σ [(|∇ψ|² + δ²)^{p/2}/p - ωψ] h²` and its gradient
/// `apply_p_laplacian(ψ) - ω` (per unit cell area).
pub fn p_dirichlet_energy(
    psi: &ScalarField,
    omega: &ScalarField,
    p: PExponent,
    cfg: &PlapConfig,
) -> Result<(f64, ScalarField)> {
    crate::fields::check_same_grid(&psi.grid, &omega.grid)?;
    if psi.grid.is_periodic() {
        source_mean_check(omega)?;
    }
    let j = energy_value(psi, omega, p.p(), cfg.delta);
    let gradient = apply_p_laplacian(psi, p, cfg).sub(omega);
    Ok((j, gradient))
}

/// Vector γ-Laplacian `div(|∇v|^{γ-2} ∇v)` with the Frobenius modulus
/// shared by both components.
pub fn apply_gamma_laplacian_vec(
    v: &VectorField2,
    gamma: f64,
    cfg: &PlapConfig,
) -> Result<VectorField2> {
    if !(gamma > 1.0) {
        return Err(Error::InvalidExponent(gamma));
    }
    let (u_f, v_f) = (v.u_field(), v.v_field());
    let (ux, uy, vx, vy) = (dx(&u_f), dy(&u_f), dx(&v_f), dy(&v_f));
    let n = v.grid.len();
    let coef = par::collect(n, |k| {
        let g2 = ux.values[k].powi(2)
            + uy.values[k].powi(2)
            + vx.values[k].powi(2)
            + vy.values[k].powi(2);
        coefficient(g2, cfg.delta, gamma)
    });
    let scale =
        |f: &ScalarField| -> Vec<f64> { f.values.iter().zip(&coef).map(|(a, c)| a * c).collect() };
    let flux_u = VectorField2 {
        grid: v.grid,
        u: scale(&ux),
        v: scale(&uy),
    };
    let flux_v = VectorField2 {
        grid: v.grid,
        u: scale(&vx),
        v: scale(&vy),
    };
    Ok(VectorField2 {
        grid: v.grid,
        u: div(&flux_u).values,
        v: div(&flux_v).values,
    })
}

/// `Σ (|∇v|² + δ²)^{(γ-2)/2} |∇v|² h²`, the dissipation paired with
/// [`apply_gamma_laplacian_vec`].
pub fn gamma_dissipation(v: &VectorField2, gamma: f64, delta: f64) -> f64 {
    let (u_f, v_f) = (v.u_field(), v.v_field());
    let (ux, uy, vx, vy) = (dx(&u_f), dy(&u_f), dx(&v_f), dy(&v_f));
    let n = v.grid.len();
    par::sum(n, v.grid.nx, |k| {
        let g2 = ux.values[k].powi(2)
            + uy.values[k].powi(2)
            + vx.values[k].powi(2)
            + vy.values[k].powi(2);
        coefficient(g2, delta, gamma) * g2
    }) * v.grid.cell_area()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_power_matches_powf() {
        for x in [0.0, 1e-300, 1e-12, 0.3, 1.0, 2.5, 1e8] {
            for e in [
                -1.25, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 0.3, -0.7,
            ] {
                let (a, b) = (pow_fast(x, e), f64::powf(x, e));
                assert!(
                    (a - b).abs() <= 1e-15 * b.abs() || a == b,
                    "{x}^{e}: {a} vs {b}"
                );
            }
        }
    }
    use crate::fields::{curl2, integrate, perp_grad, Grid2D};
    use crate::pmomentum::p_power;
    use std::f64::consts::PI;

    fn cfg0() -> PlapConfig {
        PlapConfig {
            delta: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn constant_is_annihilated() {
        let g = Grid2D::periodic_2pi(16).unwrap();
        let c = ScalarField::constant(g, 3.7);
        for p in [1.5, 2.0, 3.0] {
            let r = apply_p_laplacian(&c, PExponent::new(p).unwrap(), &PlapConfig::default());
            assert!(r.max_abs() == 0.0);
        }
    }

    #[test]
    fn eigenfunction_at_p2() {
        let n = 64;
        let g = Grid2D::periodic_2pi(n).unwrap();
        let psi = ScalarField::from_fn(g, |x, y| x.sin() * y.sin());
        let r = apply_p_laplacian(&psi, PExponent::new(2.0).unwrap(), &cfg0());
        let h = g.hx();
        let lam = 2.0 * (h.sin() / h).powi(2);
        let err = r.sub(&psi.scaled(lam)).max_abs();
        assert!(err < 1e-12, "{err}");
        // and ≈ 2 sin x sin y at second order
        assert!(r.sub(&psi.scaled(2.0)).max_abs() < 2.0 * h * h);
    }

    #[test]
    fn one_dimensional_profile_p3() {
        let n = 128;
        let g = Grid2D::periodic_2pi(n).unwrap();
        let psi = ScalarField::from_fn(g, |x, _| x.sin());
        let r = apply_p_laplacian(&psi, PExponent::new(3.0).unwrap(), &cfg0());
        let exact = ScalarField::from_fn(g, |x, _| 2.0 * x.cos().abs() * x.sin());
        // |cos x| has a kink, so the error is first order near the kinks.
        let err = r.sub(&exact).max_abs();
        assert!(err < 3.0 * g.hx(), "{err}");
    }

    #[test]
    fn matches_curl_of_p_momentum() {
        let g = Grid2D::periodic_2pi(32).unwrap();
        let psi = ScalarField::from_fn(g, |x, y| {
            (x + 0.3).sin() * (2.0 * y).cos() + 0.2 * (x - y).cos()
        });
        for p in [1.5, 2.5, 4.0] {
            let e = PExponent::new(p).unwrap();
            let lhs = apply_p_laplacian(&psi, e, &cfg0());
            let rhs = curl2(&p_power(&perp_grad(&psi), e));
            assert!(lhs.sub(&rhs).max_abs() < 1e-10);
            assert!(integrate(&lhs).abs() < 1e-12 * lhs.max_abs().max(1.0));
        }
    }

    #[test]
    fn energy_rejects_nonzero_mean_source() {
        let g = Grid2D::periodic_2pi(16).unwrap();
        let psi = ScalarField::zeros(g);
        let omega = ScalarField::constant(g, 1.0);
        let e = PExponent::new(2.0).unwrap();
        assert!(matches!(
            p_dirichlet_energy(&psi, &omega, e, &PlapConfig::default()),
            Err(Error::NonZeroMeanSource { .. })
        ));
        let (j, gj) = p_dirichlet_energy(&ScalarField::constant(g, 2.0), &psi, e, &cfg0()).unwrap();
        assert_eq!(j, 0.0);
        assert_eq!(gj.max_abs(), 0.0);
    }

    #[test]
    fn p2_energy_is_classical_dirichlet() {
        let g = Grid2D::periodic_2pi(16).unwrap();
        let psi = ScalarField::from_fn(g, |x, y| (x + 2.0 * y).sin());
        let mut omega = ScalarField::from_fn(g, |x, y| x.cos() * y.sin());
        omega.remove_mean();
        let (j, _) =
            p_dirichlet_energy(&psi, &omega, PExponent::new(2.0).unwrap(), &cfg0()).unwrap();
        let gpsi = grad(&psi);
        let expect = 0.5 * gpsi.dot(&gpsi) - omega.dot(&psi);
        assert!((j - expect).abs() < 1e-12 * expect.abs().max(1.0));
    }

    #[test]
    fn gamma_laplacian_reductions() {
        let g = Grid2D::periodic_2pi(64).unwrap();
        let v = VectorField2::from_fn(g, |x, y| [x.sin(), y.sin()]);
        let r = apply_gamma_laplacian_vec(&v, 2.0, &cfg0()).unwrap();
        let h = g.hx();
        let lam = (h.sin() / h).powi(2);
        let expect = v.scaled(-lam);
        assert!(r.sub(&expect).max_magnitude() < 1e-12);
        assert!(r.sub(&v.scaled(-1.0)).max_magnitude() < h * h);
        let c = VectorField2::constant(g, [1.0, -2.0]);
        for gamma in [1.5, 2.0, 3.0] {
            let r = apply_gamma_laplacian_vec(&c, gamma, &PlapConfig::default()).unwrap();
            assert_eq!(r.max_magnitude(), 0.0);
        }
        assert!(apply_gamma_laplacian_vec(&v, 1.0, &cfg0()).is_err());
        let _ = PI;
    }
}
