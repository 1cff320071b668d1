//! Advection of the p-vorticity, passive tracers and circulation.

use crate::error::{Error, Result};
use crate::fields::{Grid2D, ScalarField, VectorField2};
use crate::interp::{eval, sample_vec, stencil_index};
use crate::par;

/// Largest Courant number accepted by the flux scheme.
pub const UPWIND3_CFL_LIMIT: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Scheme {
    /// Bicubic interpolation at RK2-backtracked departure points.
    #[default]
    SemiLagrangian,
    /// Flux-form third-order upwind-biased differencing.
    Upwind3,
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "semi-lagrangian" | "sl" => Ok(Scheme::SemiLagrangian),
            "upwind3" => Ok(Scheme::Upwind3),
            _ => Err(format!(
                "unknown scheme `{s}` (expected semi-lagrangian or upwind3)"
            )),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::SemiLagrangian => "semi-lagrangian",
            Scheme::Upwind3 => "upwind3",
        })
    }
}

/// `max|v| dt / min(hx, hy)`.
pub fn courant(v: &VectorField2, dt: f64) -> f64 {
    v.max_magnitude() * dt / v.grid.hx().min(v.grid.hy())
}

/// Semi-Lagrangian step with the departure point found by midpoint
/// iteration (`iters` velocity evaluations after the first) along `v`.
pub fn semi_lagrangian(
    omega: &ScalarField,
    v: &VectorField2,
    dt: f64,
    iters: usize,
) -> ScalarField {
    let grid = omega.grid;
    let (nx, hx, hy) = (grid.nx, grid.hx(), grid.hy());
    let (cx, cy) = (dt / hx, dt / hy);
    let values = par::collect(grid.len(), |k| {
        let (i, j) = ((k % nx) as f64, (k / nx) as f64);
        let (mut ux, mut uy) = (v.u[k], v.v[k]);
        for _ in 0..iters {
            let s = stencil_index(&grid, i - 0.5 * cx * ux, j - 0.5 * cy * uy);
            ux = eval(&v.u, nx, &s);
            uy = eval(&v.v, nx, &s);
        }
        let s = stencil_index(&grid, i - cx * ux, j - cy * uy);
        eval(&omega.values, nx, &s)
    });
    ScalarField { grid, values }
}

/// Two-level semi-Lagrangian step: departure points follow the average
/// of the velocities at the two time levels.
pub fn semi_lagrangian_two_level(
    omega: &ScalarField,
    v_old: &VectorField2,
    v_new: &VectorField2,
    dt: f64,
) -> ScalarField {
    let mid = v_old.axpy(1.0, v_new).scaled(0.5);
    semi_lagrangian(omega, &mid, dt, 2)
}

#[inline]
fn neighbour(i: usize, d: isize, n: usize, periodic: bool) -> usize {
    let m = i as isize + d;
    if periodic {
        m.rem_euclid(n as isize) as usize
    } else {
        m.clamp(0, n as isize - 1) as usize
    }
}

#[inline]
fn face_value(vel: f64, wm: f64, w0: f64, w1: f64, w2: f64) -> f64 {
    if vel >= 0.0 {
        (-wm + 5.0 * w0 + 2.0 * w1) / 6.0
    } else {
        (2.0 * w0 + 5.0 * w1 - w2) / 6.0
    }
}

/// `-div(v ω)` with averaged face velocities and third-order upwind-biased
/// face values. Equals `-v·∇ω` when `div v = 0` discretely.
pub fn upwind3_tendency(omega: &ScalarField, v: &VectorField2) -> ScalarField {
    let grid = omega.grid;
    let (nx, ny) = (grid.nx, grid.ny);
    let periodic = grid.is_periodic();
    let (hx, hy) = (grid.hx(), grid.hy());
    let w = &omega.values;
    // Flux through the face between cells (i, j) and (i+1, j).
    let flux_x = |i: usize, j: usize| -> f64 {
        let r = j * nx;
        let ip = neighbour(i, 1, nx, periodic);
        let vel = 0.5 * (v.u[r + i] + v.u[r + ip]);
        let wm = w[r + neighbour(i, -1, nx, periodic)];
        let w2 = w[r + neighbour(i, 2, nx, periodic)];
        vel * face_value(vel, wm, w[r + i], w[r + ip], w2)
    };
    let flux_y = |i: usize, j: usize| -> f64 {
        let jp = neighbour(j, 1, ny, periodic);
        let vel = 0.5 * (v.v[j * nx + i] + v.v[jp * nx + i]);
        let wm = w[neighbour(j, -1, ny, periodic) * nx + i];
        let w2 = w[neighbour(j, 2, ny, periodic) * nx + i];
        vel * face_value(vel, wm, w[j * nx + i], w[jp * nx + i], w2)
    };
    let values = par::collect(grid.len(), |k| {
        let (i, j) = (k % nx, k / nx);
        let fx_lo = if periodic || i > 0 {
            flux_x(neighbour(i, -1, nx, periodic), j)
        } else {
            0.0
        };
        let fx_hi = if periodic || i + 1 < nx {
            flux_x(i, j)
        } else {
            0.0
        };
        let fy_lo = if periodic || j > 0 {
            flux_y(i, neighbour(j, -1, ny, periodic))
        } else {
            0.0
        };
        let fy_hi = if periodic || j + 1 < ny {
            flux_y(i, j)
        } else {
            0.0
        };
        -((fx_hi - fx_lo) / hx + (fy_hi - fy_lo) / hy)
    });
    ScalarField { grid, values }
}

/// One SSP-RK3 step of `ω_t = L(ω)`, written in increment form so a zero
/// tendency leaves `ω` bit for bit unchanged.
pub(crate) fn ssp_rk3<F>(omega: &ScalarField, dt: f64, mut tendency: F) -> Result<ScalarField>
where
    F: FnMut(&ScalarField) -> Result<ScalarField>,
{
    let l0 = tendency(omega)?;
    let u1 = omega.axpy(dt, &l0);
    let l1 = tendency(&u1)?;
    let u2 = omega.axpy(0.25 * dt, &l0.axpy(1.0, &l1));
    let l2 = tendency(&u2)?;
    let inc = l0.axpy(1.0, &l1).scaled(1.0 / 6.0).axpy(2.0 / 3.0, &l2);
    Ok(omega.axpy(dt, &inc))
}

/// One advection step of `ω_t + v·∇ω = 0` with `v` frozen over the step.
pub fn advect_scalar(
    omega: &ScalarField,
    v: &VectorField2,
    dt: f64,
    scheme: Scheme,
) -> Result<ScalarField> {
    crate::fields::check_same_grid(&omega.grid, &v.grid)?;
    match scheme {
        Scheme::SemiLagrangian => Ok(semi_lagrangian(omega, v, dt, 1)),
        Scheme::Upwind3 => {
            let cfl = courant(v, dt);
            if cfl > UPWIND3_CFL_LIMIT {
                return Err(Error::CflViolation {
                    cfl,
                    limit: UPWIND3_CFL_LIMIT,
                });
            }
            ssp_rk3(omega, dt, |w| Ok(upwind3_tendency(w, v)))
        }
    }
}

/// Passive particles, optionally an ordered closed curve.
#[derive(Debug, Clone, PartialEq)]
pub struct TracerSet {
    pub positions: Vec<[f64; 2]>,
    pub closed: bool,
}

impl TracerSet {
    pub fn new(positions: Vec<[f64; 2]>, closed: bool) -> Result<Self> {
        if closed && positions.len() < 8 {
            return Err(Error::InvalidParameter(format!(
                "a closed curve needs at least 8 points, got {}",
                positions.len()
            )));
        }
        Ok(Self { positions, closed })
    }

    /// Counter-clockwise circle of `n` points.
    pub fn circle(center: [f64; 2], radius: f64, n: usize) -> Result<Self> {
        let pts = (0..n)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
            })
            .collect();
        Self::new(pts, true)
    }

    pub fn reversed(&self) -> Self {
        let mut positions = self.positions.clone();
        positions.reverse();
        Self {
            positions,
            closed: self.closed,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// RK3 for `ẋ = v(x, t)` with the velocity linear in time between
/// `v_old` (start of the step) and `v_new` (end of the step).
pub fn advance_tracers_between(
    ts: &TracerSet,
    v_old: &VectorField2,
    v_new: &VectorField2,
    dt: f64,
) -> TracerSet {
    let grid: Grid2D = v_old.grid;
    let mid = v_old.axpy(1.0, v_new).scaled(0.5);
    let positions = par::map_items(&ts.positions, |&x| {
        let k1 = sample_vec(v_old, x);
        let k2 = sample_vec(&mid, [x[0] + 0.5 * dt * k1[0], x[1] + 0.5 * dt * k1[1]]);
        let k3 = sample_vec(
            v_new,
            [
                x[0] - dt * k1[0] + 2.0 * dt * k2[0],
                x[1] - dt * k1[1] + 2.0 * dt * k2[1],
            ],
        );
        let step = |a: usize| x[a] + dt / 6.0 * (k1[a] + 4.0 * k2[a] + k3[a]);
        grid.wrap([step(0), step(1)])
    });
    TracerSet {
        positions,
        closed: ts.closed,
    }
}

/// RK3 for `ẋ = v(x)` with a steady velocity.
pub fn advance_tracers(ts: &TracerSet, v: &VectorField2, dt: f64) -> TracerSet {
    advance_tracers_between(ts, v, v, dt)
}

/// Trapezoidal `∮ w·τ ds` along the closed polygon.
pub fn circulation(ts: &TracerSet, w: &VectorField2) -> Result<f64> {
    if !ts.closed || ts.positions.len() < 8 {
        return Err(Error::CurveNotClosed);
    }
    let n = ts.positions.len();
    let vals: Vec<[f64; 2]> = par::map_items(&ts.positions, |&x| sample_vec(w, x));
    let mut parts: Vec<f64> = (0..n)
        .map(|a| {
            let b = (a + 1) % n;
            let d = w.grid.displacement(ts.positions[a], ts.positions[b]);
            0.5 * ((vals[a][0] + vals[b][0]) * d[0] + (vals[a][1] + vals[b][1]) * d[1])
        })
        .collect();
    // Summing in a fixed magnitude order makes reversal an exact sign flip.
    parts.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    Ok(parts.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{grad, integrate, perp_grad};
    use std::f64::consts::PI;

    fn rotation(grid: Grid2D) -> VectorField2 {
        let [cx, cy] = grid.center();
        VectorField2::from_fn(grid, |x, y| [-(y - cy), x - cx])
    }

    fn stream(grid: Grid2D) -> VectorField2 {
        perp_grad(&ScalarField::from_fn(grid, |x, y| {
            x.sin() * (2.0 * y).cos() + 0.3 * y.sin()
        }))
    }

    #[test]
    fn constants_and_rest_are_preserved() {
        let grid = Grid2D::periodic_2pi(32).unwrap();
        let c = ScalarField::constant(grid, 0.7);
        let v = stream(grid);
        let sl = advect_scalar(&c, &v, 0.05, Scheme::SemiLagrangian).unwrap();
        assert!(sl.values.iter().all(|&x| x == 0.7));
        let up = advect_scalar(&c, &v, 0.05, Scheme::Upwind3).unwrap();
        assert!(up.sub(&c).max_abs() < 1e-14);

        let w = ScalarField::from_fn(grid, |x, y| (x + 2.0 * y).sin());
        let zero = VectorField2::zeros(grid);
        for scheme in [Scheme::SemiLagrangian, Scheme::Upwind3] {
            assert_eq!(advect_scalar(&w, &zero, 0.1, scheme).unwrap(), w);
        }
    }

    #[test]
    fn upwind3_conserves_integral_and_checks_cfl() {
        let grid = Grid2D::periodic_2pi(48).unwrap();
        let w = ScalarField::from_fn(grid, |x, y| (x - 1.0).cos().exp() * (y + 0.5).sin());
        let v = stream(grid);
        let dt = 0.5 * grid.hx() / v.max_magnitude();
        let next = advect_scalar(&w, &v, dt, Scheme::Upwind3).unwrap();
        let (a, b) = (integrate(&w), integrate(&next));
        let scale = integrate(&ScalarField {
            grid,
            values: w.values.iter().map(|x| x.abs()).collect(),
        });
        assert!((a - b).abs() <= 1e-12 * scale);
        assert!(matches!(
            advect_scalar(&w, &v, 10.0 * dt, Scheme::Upwind3),
            Err(Error::CflViolation { .. })
        ));
    }

    #[test]
    fn upwind3_is_third_order_in_space() {
        // Steady shear: ω_t = -u ω_x with u = sin y.
        let err = |n: usize| {
            let grid = Grid2D::periodic_2pi(n).unwrap();
            let w = ScalarField::from_fn(grid, |x, _| x.sin());
            let v = VectorField2::from_fn(grid, |_, y| [y.sin(), 0.0]);
            let exact = ScalarField::from_fn(grid, |x, y| -y.sin() * x.cos());
            upwind3_tendency(&w, &v).sub(&exact).max_abs()
        };
        let (e1, e2) = (err(32), err(64));
        assert!(e1 / e2 > 3.5, "{e1} {e2}");
    }

    #[test]
    fn solid_body_rotation_returns_blob() {
        let grid = Grid2D::periodic(128, 128, 2.0, 2.0).unwrap();
        let blob = ScalarField::from_fn(grid, |x, y| {
            (-((x - 1.4).powi(2) + (y - 1.0).powi(2)) / (2.0 * 0.1f64.powi(2))).exp()
        });
        let v = rotation(grid);
        let steps = 200;
        let dt = 2.0 * PI / steps as f64;
        let mut w = blob.clone();
        for _ in 0..steps {
            w = advect_scalar(&w, &v, dt, Scheme::SemiLagrangian).unwrap();
        }
        let rel = w.sub(&blob).l2_norm() / blob.l2_norm();
        assert!(rel <= 0.03, "relative error {rel}");
        let (lo, hi) = (
            blob.values.iter().cloned().fold(f64::MAX, f64::min),
            blob.max_abs(),
        );
        let range = hi - lo;
        for &x in &w.values {
            assert!(x >= lo - 0.05 * range && x <= hi + 0.05 * range);
        }
    }

    #[test]
    fn tracers_translate_and_rotate() {
        let grid = Grid2D::periodic(32, 32, 2.0, 2.0).unwrap();
        let ts = TracerSet::new(vec![[0.3, 0.4], [1.9, 1.1]], false).unwrap();
        let still = advance_tracers(&ts, &VectorField2::zeros(grid), 0.1);
        assert_eq!(still, ts);
        let shifted = advance_tracers(&ts, &VectorField2::constant(grid, [0.25, -0.5]), 0.2);
        for (a, b) in ts.positions.iter().zip(&shifted.positions) {
            let d = grid.displacement(*a, *b);
            assert!((d[0] - 0.05).abs() < 1e-14 && (d[1] + 0.1).abs() < 1e-14);
        }

        let circle = TracerSet::circle([1.0, 1.0], 0.4, 16).unwrap();
        let v = rotation(grid);
        let steps = 200;
        let mut c = circle.clone();
        for _ in 0..steps {
            c = advance_tracers(&c, &v, 2.0 * PI / steps as f64);
        }
        let err = circle
            .positions
            .iter()
            .zip(&c.positions)
            .map(|(a, b)| (a[0] - b[0]).hypot(a[1] - b[1]))
            .fold(0.0, f64::max);
        assert!(err <= 1e-4 * 2.0, "{err}");
    }

    #[test]
    fn circulation_cases() {
        let grid = Grid2D::periodic(64, 64, 2.0, 2.0).unwrap();
        let r = 0.5;
        let curve = TracerSet::circle([1.0, 1.0], r, 256).unwrap();
        let gamma = circulation(&curve, &rotation(grid)).unwrap();
        assert!((gamma / (2.0 * PI * r * r) - 1.0).abs() < 5e-3);
        assert_eq!(
            circulation(&curve.reversed(), &rotation(grid)).unwrap(),
            -gamma
        );

        // Exact gradient of a quadratic on a Dirichlet grid.
        let dgrid = Grid2D::dirichlet(40, 40, 2.0, 2.0).unwrap();
        let g = grad(&ScalarField::from_fn(dgrid, |x, y| {
            x * x - 0.5 * x * y + 2.0 * y
        }));
        let g_circ = circulation(&curve, &g).unwrap();
        assert!(g_circ.abs() <= 1e-8 * g.max_magnitude() * 2.0 * PI * r);

        let open = TracerSet::new(curve.positions.clone(), false).unwrap();
        assert_eq!(circulation(&open, &g), Err(Error::CurveNotClosed));
        assert!(TracerSet::new(vec![[0.0, 0.0]; 4], true).is_err());
    }
}
