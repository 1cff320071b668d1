//! Reference 2D Euler integrator with a direct spectral stream-function
//! solve. Shares the advection operators with the p-Euler path but not the
//! nonlinear elliptic solver.

use crate::error::Result;
use crate::fields::{perp_grad, Grid2D, ScalarField, VectorField2};
use crate::spectral::{remove_gradient_null_space, Spectral};
use crate::transport::{
    semi_lagrangian, semi_lagrangian_two_level, ssp_rk3, upwind3_tendency, Scheme,
};

#[derive(Debug)]
pub struct ClassicalEuler {
    spectral: Spectral,
    scheme: Scheme,
}

impl ClassicalEuler {
    pub fn new(grid: Grid2D, scheme: Scheme) -> Self {
        Self {
            spectral: Spectral::new(grid),
            scheme,
        }
    }

    /// Gauge-projected vorticity, stream function and velocity.
    pub fn velocity(&self, omega: &ScalarField) -> (ScalarField, ScalarField, VectorField2) {
        let mut omega = omega.clone();
        remove_gradient_null_space(&mut omega);
        let psi = self.spectral.solve_neg_laplacian(&omega);
        let v = perp_grad(&psi);
        (omega, psi, v)
    }

    /// Advance `ω` by `dt`.
    pub fn step(&self, omega: &ScalarField, dt: f64) -> Result<ScalarField> {
        let (omega, _, v) = self.velocity(omega);
        let next = match self.scheme {
            Scheme::SemiLagrangian => {
                let (_, _, v1) = self.velocity(&semi_lagrangian(&omega, &v, dt, 1));
                semi_lagrangian_two_level(&omega, &v, &v1, dt)
            }
            Scheme::Upwind3 => ssp_rk3(&omega, dt, |w| {
                let (w, _, v) = self.velocity(w);
                Ok(upwind3_tendency(&w, &v))
            })?,
        };
        Ok(self.velocity(&next).0)
    }
}
