//! Named initial conditions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::fields::{curl2, perp_grad, Grid2D, ScalarField, VectorField2};
use crate::pmomentum::p_power;
use crate::steppers::{FlowState, Model, Stepper};

/// Initial data, given either as `ω_p` or as a velocity.
#[derive(Debug, Clone, PartialEq)]
pub enum Initial {
    Vorticity(ScalarField),
    Velocity(VectorField2),
}

impl Initial {
    pub fn grid(&self) -> &Grid2D {
        match self {
            Initial::Vorticity(w) => &w.grid,
            Initial::Velocity(v) => &v.grid,
        }
    }
}

/// Elliptical Gaussian blob (aspect 1.5) with zero mean, unit peak.
pub fn gaussian_vortex(grid: Grid2D) -> ScalarField {
    let [cx, cy] = grid.center();
    let s = grid.lx.min(grid.ly) / 10.0;
    let (sx, sy) = (1.5 * s, s);
    let mut w = ScalarField::from_fn(grid, move |x, y| {
        let (a, b) = ((x - cx) / sx, (y - cy) / sy);
        (-0.5 * (a * a + b * b)).exp()
    });
    w.remove_mean();
    w
}

/// Shielded radial bump `(1 - s)⁴(1 - 6s)`, `s = (r/R)²`. Its total
/// circulation vanishes, so the velocity is zero outside radius `R` and the
/// state is steady on the torus as well as on the plane.
pub fn radial_steady(grid: Grid2D) -> ScalarField {
    let [cx, cy] = grid.center();
    let r = 0.35 * grid.lx.min(grid.ly);
    let mut w = ScalarField::from_fn(grid, move |x, y| {
        let s = ((x - cx).powi(2) + (y - cy).powi(2)) / (r * r);
        if s < 1.0 {
            (1.0 - s).powi(4) * (1.0 - 6.0 * s)
        } else {
            0.0
        }
    });
    // Quadrature leaves a tiny residual mean.
    w.remove_mean();
    w
}

/// `v = (sin kx cos ky, -(k/l) cos kx sin ky)` with one period per domain
/// length; the classical vortex on the `2π` square.
pub fn taylor_green(grid: Grid2D) -> VectorField2 {
    let (k, l) = (
        std::f64::consts::TAU / grid.lx,
        std::f64::consts::TAU / grid.ly,
    );
    VectorField2::from_fn(grid, move |x, y| {
        [
            (k * x).sin() * (l * y).cos(),
            -(k / l) * (k * x).cos() * (l * y).sin(),
        ]
    })
}

/// Smooth random velocity `∇^⊥ψ` with `ψ` a sum of Fourier modes of index
/// at most 4, normalised to unit maximum speed.
pub fn random_seeded(grid: Grid2D, seed: u64) -> VectorField2 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes = Vec::new();
    for mx in -4i32..=4 {
        for my in 0i32..=4 {
            let m2 = mx * mx + my * my;
            if m2 == 0 || m2 > 16 || (my == 0 && mx < 0) {
                continue;
            }
            let amp = rng.gen_range(-1.0..1.0) / f64::from(m2);
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            modes.push((f64::from(mx), f64::from(my), amp, phase));
        }
    }
    let (kx, ky) = (
        std::f64::consts::TAU / grid.lx,
        std::f64::consts::TAU / grid.ly,
    );
    let psi = ScalarField::from_fn(grid, move |x, y| {
        modes
            .iter()
            .map(|&(a, b, amp, ph)| amp * (a * kx * x + b * ky * y + ph).cos())
            .sum()
    });
    let v = perp_grad(&psi);
    let vmax = v.max_magnitude();
    if vmax > 0.0 {
        v.scaled(1.0 / vmax)
    } else {
        v
    }
}

impl Stepper {
    /// Initial state for this stepper's model. Velocity data is turned into
    /// `ω_p = curl(v_p)` for vorticity-form runs; vorticity data is inverted
    /// for momentum-form runs.
    pub fn initial_state(&mut self, init: &Initial) -> Result<FlowState> {
        let momentum = self.config().model == Model::MomentumGammaP;
        let p = self.config().p;
        match (init, momentum) {
            (Initial::Vorticity(w), false) => self.state_from_vorticity(w, 0.0),
            (Initial::Velocity(v), false) => self.state_from_vorticity(&curl2(&p_power(v, p)), 0.0),
            (Initial::Vorticity(w), true) => {
                let s = self.state_from_vorticity(w, 0.0)?;
                self.state_from_velocity(&s.v, 0.0)
            }
            (Initial::Velocity(v), true) => self.state_from_velocity(v, 0.0),
        }
    }
}
