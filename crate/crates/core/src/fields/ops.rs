use super::{Grid2D, ScalarField, VectorField2};
use crate::error::{Error, Result};
use crate::par;

/// `out += c · Dx src`, central with one-sided Dirichlet closures.
fn add_dx(src: &[f64], g: &Grid2D, c: f64, out: &mut [f64]) {
    let nx = g.nx;
    let s = c * 0.5 / g.hx();
    par::for_each_row(out, nx, |j, row| {
        let r = &src[j * nx..(j + 1) * nx];
        for i in 1..nx - 1 {
            row[i] += (r[i + 1] - r[i - 1]) * s;
        }
        match g.bc {
            super::Boundary::Periodic => {
                row[0] += (r[1] - r[nx - 1]) * s;
                row[nx - 1] += (r[0] - r[nx - 2]) * s;
            }
            super::Boundary::Dirichlet => {
                row[0] += (-3.0 * r[0] + 4.0 * r[1] - r[2]) * s;
                row[nx - 1] += (3.0 * r[nx - 1] - 4.0 * r[nx - 2] + r[nx - 3]) * s;
            }
        }
    });
}

/// `out += c · Dy src`.
fn add_dy(src: &[f64], g: &Grid2D, c: f64, out: &mut [f64]) {
    let (nx, ny) = (g.nx, g.ny);
    let s = c * 0.5 / g.hy();
    let row_of = |j: usize| &src[j * nx..(j + 1) * nx];
    par::for_each_row(out, nx, |j, row| {
        let interior = j > 0 && j + 1 < ny;
        if interior || g.is_periodic() {
            let jp = if j + 1 == ny { 0 } else { j + 1 };
            let jm = if j == 0 { ny - 1 } else { j - 1 };
            let (a, b) = (row_of(jp), row_of(jm));
            for i in 0..nx {
                row[i] += (a[i] - b[i]) * s;
            }
        } else {
            let (a, b, d, w) = if j == 0 {
                (0, 1, 2, -1.0)
            } else {
                (ny - 1, ny - 2, ny - 3, 1.0)
            };
            let (ra, rb, rd) = (row_of(a), row_of(b), row_of(d));
            for i in 0..nx {
                row[i] += w * (3.0 * ra[i] - 4.0 * rb[i] + rd[i]) * s;
            }
        }
    });
}

/// Central difference along x (one-sided at Dirichlet edges).
pub fn dx(f: &ScalarField) -> ScalarField {
    let mut out = vec![0.0; f.grid.len()];
    add_dx(&f.values, &f.grid, 1.0, &mut out);
    ScalarField {
        grid: f.grid,
        values: out,
    }
}

/// Central difference along y (one-sided at Dirichlet edges).
pub fn dy(f: &ScalarField) -> ScalarField {
    let mut out = vec![0.0; f.grid.len()];
    add_dy(&f.values, &f.grid, 1.0, &mut out);
    ScalarField {
        grid: f.grid,
        values: out,
    }
}

pub fn grad(f: &ScalarField) -> VectorField2 {
    VectorField2 {
        grid: f.grid,
        u: dx(f).values,
        v: dy(f).values,
    }
}

/// Central divergence; on periodic grids `Σ f div(w) = -Σ grad(f)·w`.
pub fn div(w: &VectorField2) -> ScalarField {
    let mut out = vec![0.0; w.grid.len()];
    add_dx(&w.u, &w.grid, 1.0, &mut out);
    add_dy(&w.v, &w.grid, 1.0, &mut out);
    ScalarField {
        grid: w.grid,
        values: out,
    }
}

/// `∇⊥ψ = (∂_y ψ, -∂_x ψ)`, discretely divergence-free.
pub fn perp_grad(psi: &ScalarField) -> VectorField2 {
    let n = psi.grid.len();
    let (mut u, mut v) = (vec![0.0; n], vec![0.0; n]);
    add_dy(&psi.values, &psi.grid, 1.0, &mut u);
    add_dx(&psi.values, &psi.grid, -1.0, &mut v);
    VectorField2 {
        grid: psi.grid,
        u,
        v,
    }
}

/// Scalar curl `∂_x w_v - ∂_y w_u`, i.e. `div(w⊥)` with `a⊥ = (a₂, -a₁)`.
/// With this convention `curl2(perp_grad ψ) = -Δψ`.
pub fn curl2(w: &VectorField2) -> ScalarField {
    let mut out = vec![0.0; w.grid.len()];
    add_dx(&w.v, &w.grid, 1.0, &mut out);
    add_dy(&w.u, &w.grid, -1.0, &mut out);
    ScalarField {
        grid: w.grid,
        values: out,
    }
}

/// Midpoint-rule integral `Σ f hx hy`.
pub fn integrate(f: &ScalarField) -> f64 {
    let n = f.values.len();
    par::sum(n, f.grid.nx, |k| f.values[k]) * f.grid.cell_area()
}

/// Pointwise magnitude used by [`lp_norm`].
pub trait Magnitude {
    fn grid(&self) -> &Grid2D;
    fn magnitude_at(&self, k: usize) -> f64;
}

impl Magnitude for ScalarField {
    fn grid(&self) -> &Grid2D {
        &self.grid
    }
    #[inline]
    fn magnitude_at(&self, k: usize) -> f64 {
        self.values[k].abs()
    }
}

impl Magnitude for VectorField2 {
    fn grid(&self) -> &Grid2D {
        &self.grid
    }
    #[inline]
    fn magnitude_at(&self, k: usize) -> f64 {
        self.u[k].hypot(self.v[k])
    }
}

/// Sum of `|f|^p hx hy`, the p-th power of the discrete Lp norm.
pub fn lp_norm_pow<F: Magnitude + Sync>(f: &F, p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    let g = *f.grid();
    Ok(par::sum(g.len(), g.nx, |k| f.magnitude_at(k).powf(p)) * g.cell_area())
}

/// `(Σ |f|^p hx hy)^{1/p}`; vector fields use the Euclidean magnitude.
pub fn lp_norm<F: Magnitude + Sync>(f: &F, p: f64) -> Result<f64> {
    Ok(lp_norm_pow(f, p)?.powf(1.0 / p))
}
