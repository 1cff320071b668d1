//! Self-similar solutions of `ρ_t = Δ_p ρ^m` and an explicit conservative
//! integrator for it.

use crate::error::{Error, Result};
use crate::fields::{Boundary, ScalarField};
use crate::plaplacian::{coefficient, PlapConfig};
use crate::quadrature::{integrate, integrate_to_infinity};

const NORMALISATION_TOL: f64 = 1e-12;
/// Stability constant of the explicit step.
pub const DIFFUSION_BETA: f64 = 0.4;

/// `β_c = 1/(p + dmp - dm - d)`.
pub fn beta_critical(p: f64, m: f64, d: u32) -> Result<f64> {
    let d = f64::from(d);
    let den = p + d * m * p - d * m - d;
    if !(den > 0.0) || !p.is_finite() || !m.is_finite() {
        return Err(Error::InvalidRegime(format!(
            "p + dmp - dm - d = {den} must be positive"
        )));
    }
    Ok(1.0 / den)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileKind {
    /// `m(p-1) = 1`: `U = A exp(-κ|ξ|^{p/(p-1)})`.
    Exponential { amplitude: f64 },
    /// `m(p-1) > 1`: `U = [c (R^a - |ξ|^a)₊]^e`.
    CompactSupport { radius: f64 },
    /// `m(p-1) < 1`: `U = (C + c|ξ|^a)^{-e}` with algebraic tails.
    Algebraic { offset: f64 },
}

/// Parameters and normalisation of the Barenblatt profile `U` with
/// `ρ(x, t) = t^{-dβ} U(x t^{-β})` and `∫U = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarenblattParams {
    pub p: f64,
    pub m: f64,
    pub d: u32,
    pub beta_c: f64,
    pub kind: ProfileKind,
}

/// `∫_{R^d} f(|ξ|) dξ` for a radial integrand.
fn radial_integral<F: Fn(f64) -> f64>(f: F, d: u32, upper: Option<f64>) -> Result<f64> {
    let (weight, power) = if d == 1 {
        (2.0, 0)
    } else {
        (2.0 * std::f64::consts::PI, 1)
    };
    let g = |r: f64| f(r) * r.powi(power);
    let v = match upper {
        Some(r) => integrate(g, 0.0, r, NORMALISATION_TOL)?,
        None => integrate_to_infinity(g, 0.0, NORMALISATION_TOL)?,
    };
    Ok(weight * v)
}

impl BarenblattParams {
    pub fn new(p: f64, m: f64, d: u32) -> Result<Self> {
        if !(p > 1.0) {
            return Err(Error::InvalidExponent(p));
        }
        if !(d == 1 || d == 2) {
            return Err(Error::InvalidParameter(format!(
                "dimension must be 1 or 2, got {d}"
            )));
        }
        if !(m > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "m must be positive, got {m}"
            )));
        }
        let beta_c = beta_critical(p, m, d)?;
        let mut out = Self {
            p,
            m,
            d,
            beta_c,
            kind: ProfileKind::Exponential { amplitude: 1.0 },
        };
        let a = p / (p - 1.0);
        let df = f64::from(d);
        let s = m * (p - 1.0);
        out.kind = if (s - 1.0).abs() < 1e-12 {
            let kappa = out.kappa();
            let mass = radial_integral(|r| (-kappa * r.powf(a)).exp(), d, None)?;
            ProfileKind::Exponential {
                amplitude: 1.0 / mass,
            }
        } else if s > 1.0 {
            // U_R(r) = (c R^a)^e (1 - (r/R)^a)^e integrates to (c)^e R^{ae+d} I.
            let (c, e) = (out.coefficient(), (p - 1.0) / (s - 1.0));
            let i = radial_integral(|r| (1.0 - r.powf(a)).max(0.0).powf(e), d, Some(1.0))?;
            let radius = (1.0 / (c.powf(e) * i)).powf(1.0 / (a * e + df));
            ProfileKind::CompactSupport { radius }
        } else {
            // U = C^{-e}(1 + (c/C) r^a)^{-e}; substituting r = (C/c)^{1/a} s
            // gives mass C^{d/a - e} c^{-d/a} I.
            let (c, e) = (out.coefficient(), (p - 1.0) / (1.0 - s));
            if !(a * e > df) {
                return Err(Error::InvalidRegime(format!(
                    "profile tail |ξ|^(-{}) is not integrable in d = {d}",
                    a * e
                )));
            }
            let i = radial_integral(|r| (1.0 + r.powf(a)).powf(-e), d, None)?;
            let offset = (c.powf(df / a) / i).powf(1.0 / (df / a - e));
            ProfileKind::Algebraic { offset }
        };
        Ok(out)
    }

    /// Decay rate of the exponential branch, `((p-1)²/p) β^{1/(p-1)}`.
    fn kappa(&self) -> f64 {
        let p = self.p;
        (p - 1.0).powi(2) / p * self.beta_c.powf(1.0 / (p - 1.0))
    }

    /// `|m(p-1) - 1| β^{1/(p-1)} / (mp)`.
    fn coefficient(&self) -> f64 {
        let (p, m) = (self.p, self.m);
        (m * (p - 1.0) - 1.0).abs() / (m * p) * self.beta_c.powf(1.0 / (p - 1.0))
    }

    /// `U(|ξ|)`.
    pub fn profile(&self, r: f64) -> f64 {
        let (p, m) = (self.p, self.m);
        let a = p / (p - 1.0);
        let ra = r.abs().powf(a);
        match self.kind {
            ProfileKind::Exponential { amplitude } => amplitude * (-self.kappa() * ra).exp(),
            ProfileKind::CompactSupport { radius } => {
                let gap = radius.powf(a) - ra;
                if gap <= 0.0 {
                    0.0
                } else {
                    (self.coefficient() * gap).powf((p - 1.0) / (m * (p - 1.0) - 1.0))
                }
            }
            ProfileKind::Algebraic { offset } => {
                (offset + self.coefficient() * ra).powf(-(p - 1.0) / (1.0 - m * (p - 1.0)))
            }
        }
    }

    /// `U(ξ)` at a 2D point (`d = 2`) or on the x axis (`d = 1`).
    pub fn profile_at(&self, xi: [f64; 2]) -> f64 {
        if self.d == 1 {
            self.profile(xi[0])
        } else {
            self.profile(xi[0].hypot(xi[1]))
        }
    }

    /// `t^{-dβ} U(x t^{-β})`.
    pub fn density(&self, r: f64, t: f64) -> f64 {
        let s = t.powf(self.beta_c);
        self.profile(r / s) / s.powi(self.d as i32)
    }

    /// Support radius of the compact branch.
    pub fn support_radius(&self) -> Option<f64> {
        match self.kind {
            ProfileKind::CompactSupport { radius } => Some(radius),
            _ => None,
        }
    }
}

/// `U(ξ)` for the given parameters.
pub fn barenblatt_profile(bp: &BarenblattParams, xi: [f64; 2]) -> f64 {
    bp.profile_at(xi)
}

fn flux_coefficient(g2: f64, cfg: &PlapConfig, p: f64) -> f64 {
    coefficient(g2, cfg.delta, p)
}

/// Largest stable step of [`step_doubly_degenerate`] for `ρ`: the explicit
/// diffusion limit with the largest face gradient of `ρ^m` and the largest
/// `mρ^{m-1}`.
pub fn doubly_degenerate_dt_cap(rho: &ScalarField, p: f64, m: f64, cfg: &PlapConfig) -> f64 {
    let g = rho.grid;
    let (nx, ny, hx, hy) = (g.nx, g.ny, g.hx(), g.hy());
    let w: Vec<f64> = rho.values.iter().map(|r| r.max(0.0).powf(m)).collect();
    let mut gmax: f64 = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            if i + 1 < nx || g.is_periodic() {
                gmax = gmax.max(((w[j * nx + (i + 1) % nx] - w[k]) / hx).abs());
            }
            if j + 1 < ny || g.is_periodic() {
                gmax = gmax.max(((w[((j + 1) % ny) * nx + i] - w[k]) / hy).abs());
            }
        }
    }
    // The coefficient is monotone in |∇ρ^m|: largest at gmax for p ≥ 2 and
    // at zero gradient for p < 2.
    let c = if p >= 2.0 {
        flux_coefficient(gmax * gmax, cfg, p)
    } else {
        flux_coefficient(0.0, cfg, p)
    };
    let slope = rho
        .values
        .iter()
        .map(|&r| {
            if m == 1.0 {
                1.0
            } else {
                m * r.max(0.0).powf(m - 1.0)
            }
        })
        .fold(0.0, f64::max);
    let a_max = (p - 1.0).max(1.0) * c * slope;
    if a_max.is_infinite() {
        return 0.0;
    }
    if !(a_max > 0.0) {
        return f64::INFINITY;
    }
    DIFFUSION_BETA / (a_max * (1.0 / (hx * hx) + 1.0 / (hy * hy)))
}

/// One explicit step of `ρ_t = div((|∇ρ^m|² + δ²)^{(p-2)/2} ∇ρ^m)` in
/// compact face-flux form. Dirichlet grids use zero-flux walls, so mass is
/// conserved on both boundary types.
pub fn step_doubly_degenerate(
    rho: &ScalarField,
    p: f64,
    m: f64,
    dt: f64,
    cfg: &PlapConfig,
) -> Result<ScalarField> {
    if !(p > 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    // Round-off undershoot at the edge of a support is clipped, not rejected.
    let floor = -1e-12 * rho.max_abs();
    if rho.values.iter().any(|&r| r < floor) {
        return Err(Error::InvalidParameter(
            "density must be nonnegative".into(),
        ));
    }
    let cap = doubly_degenerate_dt_cap(rho, p, m, cfg);
    if !(dt > 0.0) || dt > cap {
        return Err(Error::DtTooLarge { requested: dt, cap });
    }
    let g = rho.grid;
    let (nx, ny, hx, hy) = (g.nx, g.ny, g.hx(), g.hy());
    let periodic = g.bc == Boundary::Periodic;
    let w: Vec<f64> = rho.values.iter().map(|r| r.max(0.0).powf(m)).collect();
    let at = |i: usize, j: usize| w[j * nx + i];
    // Central y-derivative at node (i, j), one-sided at walls.
    let cy = |i: usize, j: usize| -> f64 {
        if periodic {
            (at(i, (j + 1) % ny) - at(i, (j + ny - 1) % ny)) / (2.0 * hy)
        } else if j == 0 {
            (at(i, 1) - at(i, 0)) / hy
        } else if j + 1 == ny {
            (at(i, j) - at(i, j - 1)) / hy
        } else {
            (at(i, j + 1) - at(i, j - 1)) / (2.0 * hy)
        }
    };
    let cx = |i: usize, j: usize| -> f64 {
        if periodic {
            (at((i + 1) % nx, j) - at((i + nx - 1) % nx, j)) / (2.0 * hx)
        } else if i == 0 {
            (at(1, j) - at(0, j)) / hx
        } else if i + 1 == nx {
            (at(i, j) - at(i - 1, j)) / hx
        } else {
            (at(i + 1, j) - at(i - 1, j)) / (2.0 * hx)
        }
    };
    // Flux through the face between (i, j) and its +x / +y neighbour.
    let fx_face: Vec<f64> = (0..nx * ny)
        .map(|k| {
            let (i, j) = (k % nx, k / nx);
            if !periodic && i + 1 == nx {
                return 0.0;
            }
            let ip = (i + 1) % nx;
            let gx = (at(ip, j) - at(i, j)) / hx;
            let gy = 0.5 * (cy(i, j) + cy(ip, j));
            flux_coefficient(gx * gx + gy * gy, cfg, p) * gx
        })
        .collect();
    let fy_face: Vec<f64> = (0..nx * ny)
        .map(|k| {
            let (i, j) = (k % nx, k / nx);
            if !periodic && j + 1 == ny {
                return 0.0;
            }
            let jp = (j + 1) % ny;
            let gy = (at(i, jp) - at(i, j)) / hy;
            let gx = 0.5 * (cx(i, j) + cx(i, jp));
            flux_coefficient(gx * gx + gy * gy, cfg, p) * gy
        })
        .collect();
    let values = (0..nx * ny)
        .map(|k| {
            let (i, j) = (k % nx, k / nx);
            let west = if i > 0 {
                fx_face[k - 1]
            } else if periodic {
                fx_face[j * nx + nx - 1]
            } else {
                0.0
            };
            let south = if j > 0 {
                fy_face[k - nx]
            } else if periodic {
                fy_face[(ny - 1) * nx + i]
            } else {
                0.0
            };
            rho.values[k] + dt * ((fx_face[k] - west) / hx + (fy_face[k] - south) / hy)
        })
        .collect();
    Ok(ScalarField { grid: g, values })
}

/// Advance `ρ` from `t0` to `t1` with steps of a `cfl` fraction of
/// [`doubly_degenerate_dt_cap`], the last one shortened to land on `t1`.
/// Returns the final density and the number of steps.
pub fn evolve_doubly_degenerate(
    rho: &ScalarField,
    p: f64,
    m: f64,
    t0: f64,
    t1: f64,
    cfl: f64,
    cfg: &PlapConfig,
) -> Result<(ScalarField, usize)> {
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "cfl must lie in (0, 1], got {cfl}"
        )));
    }
    if !(t1 >= t0) {
        return Err(Error::InvalidParameter(format!(
            "end time {t1} precedes start time {t0}"
        )));
    }
    let mut rho = rho.clone();
    let mut t = t0;
    let mut steps = 0;
    while t < t1 {
        let cap = doubly_degenerate_dt_cap(&rho, p, m, cfg);
        if !(cap > 0.0) {
            return Err(Error::DtTooLarge {
                requested: t1 - t,
                cap,
            });
        }
        let dt = (cfl * cap).min(t1 - t);
        rho = step_doubly_degenerate(&rho, p, m, dt, cfg)?;
        t = if dt == t1 - t { t1 } else { t + dt };
        steps += 1;
    }
    Ok((rho, steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{integrate as field_integral, Grid2D};
    use approx::assert_relative_eq;

    #[test]
    fn critical_index_spot_values() {
        assert_eq!(beta_critical(2.0, 1.0, 1).unwrap(), 0.5);
        assert_eq!(beta_critical(2.0, 1.0, 2).unwrap(), 0.5);
        assert_eq!(beta_critical(3.0, 1.0, 1).unwrap(), 0.25);
        assert!(matches!(
            beta_critical(1.2, 0.1, 2),
            Err(Error::InvalidRegime(_))
        ));
    }

    #[test]
    fn compact_branch_closed_form() {
        // p = 3, m = 1, d = 1: U = (R^{3/2} - |ξ|^{3/2})² / 36 with R⁴ = 40.
        let bp = BarenblattParams::new(3.0, 1.0, 1).unwrap();
        let r = bp.support_radius().unwrap();
        assert_relative_eq!(r, 40f64.powf(0.25), max_relative = 1e-10);
        for xi in [0.0, 0.3, 1.1, 2.0] {
            let exact = (r.powf(1.5) - f64::powf(xi, 1.5)).powi(2) / 36.0;
            assert_relative_eq!(bp.profile(xi), exact, max_relative = 1e-10);
        }
        assert_eq!(bp.profile(r), 0.0);
        assert_eq!(bp.profile(1.5 * r), 0.0);
    }

    #[test]
    fn heat_kernel_reduction() {
        // p = 2, m = 1: the Gauss kernel exp(-|ξ|²/4)/(4π)^{d/2}.
        for d in [1u32, 2] {
            let bp = BarenblattParams::new(2.0, 1.0, d).unwrap();
            assert!(matches!(bp.kind, ProfileKind::Exponential { .. }));
            for r in [0.0f64, 0.5, 2.0] {
                let exact =
                    (-r * r / 4.0).exp() / (4.0 * std::f64::consts::PI).powf(f64::from(d) / 2.0);
                assert_relative_eq!(bp.profile(r), exact, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn unit_mass_for_all_branches() {
        for &(p, m, d) in &[
            (2.0, 1.0, 1),
            (3.0, 0.5, 2),
            (3.0, 1.0, 1),
            (2.5, 2.0, 2),
            (3.0, 0.4, 1),
            (2.0, 0.8, 1),
        ] {
            let bp = BarenblattParams::new(p, m, d).unwrap();
            let mass = match bp.support_radius() {
                Some(r) => radial_integral(|x| bp.profile(x), d, Some(r)).unwrap(),
                None => radial_integral(|x| bp.profile(x), d, None).unwrap(),
            };
            assert!(
                (mass - 1.0).abs() < 1e-8,
                "{p} {m} {d}: {mass} {:?}",
                bp.kind
            );
        }
    }

    #[test]
    fn constant_density_is_steady_and_mass_is_kept() {
        let cfg = PlapConfig::default();
        let grid = Grid2D::dirichlet(40, 4, 4.0, 0.4).unwrap();
        let c = ScalarField::constant(grid, 0.7);
        assert_eq!(step_doubly_degenerate(&c, 3.0, 1.0, 1e-3, &cfg).unwrap(), c);
        let rho = ScalarField::from_fn(grid, |x, _| (-(x - 2.0).powi(2) * 4.0).exp());
        let dt = 0.5 * doubly_degenerate_dt_cap(&rho, 3.0, 1.5, &cfg);
        let next = step_doubly_degenerate(&rho, 3.0, 1.5, dt, &cfg).unwrap();
        let (a, b) = (field_integral(&rho), field_integral(&next));
        assert!((a - b).abs() <= 1e-13 * a);
        assert!(matches!(
            step_doubly_degenerate(&rho, 3.0, 1.5, 4.0 * dt, &cfg),
            Err(Error::DtTooLarge { .. })
        ));
    }
}
