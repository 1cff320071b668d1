//! FFT-diagonalised operators on periodic grids.
//!
//! The central-difference derivative has the discrete symbol
//! `i sin(k h) / h`, so the composed (wide) Laplacian and the collocated
//! Helmholtz projection are diagonal in Fourier space. Modes where both
//! derivative symbols vanish (the constant and, for even sizes, the
//! Nyquist checkerboards) form the null space of `grad`.

use std::sync::Arc;

use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::fields::{Grid2D, ScalarField, VectorField2};
use crate::par;

/// Relative threshold under which a derivative symbol counts as zero.
const NULL_SYMBOL_TOL: f64 = 1e-12;

pub struct Spectral {
    grid: Grid2D,
    fx: Arc<dyn Fft<f64>>,
    ix: Arc<dyn Fft<f64>>,
    fy: Arc<dyn Fft<f64>>,
    iy: Arc<dyn Fft<f64>>,
    /// `sin(k h)/h` per x mode.
    ax: Vec<f64>,
    /// `sin(k h)/h` per y mode.
    ay: Vec<f64>,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    /// `1/|a|²` on the half spectrum (`nx/2 + 1` modes per row), zero on
    /// the null space.
    inv_lap: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral")
            .field("grid", &self.grid)
            .finish()
    }
}

fn signed_wavenumber(m: usize, n: usize, l: f64) -> f64 {
    let s = if m <= n / 2 {
        m as f64
    } else {
        m as f64 - n as f64
    };
    2.0 * std::f64::consts::PI * s / l
}

fn derivative_symbol(n: usize, l: f64) -> Vec<f64> {
    let h = l / n as f64;
    (0..n)
        .map(|m| {
            let k = signed_wavenumber(m, n, l);
            let a = (k * h).sin() / h;
            // Exact zeros at k = 0 and at the Nyquist index.
            if 2 * m == n || m == 0 {
                0.0
            } else {
                a
            }
        })
        .collect()
}

impl Spectral {
    pub fn new(grid: Grid2D) -> Self {
        assert!(
            grid.is_periodic(),
            "spectral operators need a periodic grid"
        );
        let mut planner = FftPlanner::new();
        let mut real = RealFftPlanner::new();
        let mut out = Self {
            grid,
            fx: planner.plan_fft_forward(grid.nx),
            ix: planner.plan_fft_inverse(grid.nx),
            fy: planner.plan_fft_forward(grid.ny),
            iy: planner.plan_fft_inverse(grid.ny),
            ax: derivative_symbol(grid.nx, grid.lx),
            ay: derivative_symbol(grid.ny, grid.ly),
            r2c: real.plan_fft_forward(grid.nx),
            c2r: real.plan_fft_inverse(grid.nx),
            inv_lap: Vec::new(),
        };
        let half = grid.nx / 2 + 1;
        out.inv_lap = (0..half * grid.ny)
            .map(|k| {
                let (mx, my) = (k % half, k / half);
                if out.is_null(mx, my) {
                    0.0
                } else {
                    let [a, b] = out.symbol(mx, my);
                    1.0 / (a * a + b * b)
                }
            })
            .collect();
        out
    }

    /// Multiply by a real, even multiplier given on the half spectrum,
    /// using real-to-complex transforms along x.
    fn real_multiplier(&self, f: &[f64], table: &[f64]) -> Vec<f64> {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let half = nx / 2 + 1;
        let zero = Complex64::new(0.0, 0.0);
        let mut spec = vec![zero; half * ny];
        par::for_each_row(&mut spec, half, |j, row| {
            let mut buf = f[j * nx..(j + 1) * nx].to_vec();
            // Lengths match by construction.
            let _ = self.r2c.process(&mut buf, row);
        });
        let mut t = vec![zero; half * ny];
        for j in 0..ny {
            for i in 0..half {
                t[i * ny + j] = spec[j * half + i];
            }
        }
        par::for_each_row(&mut t, ny, |i, col| {
            self.fy.process(col);
            for (j, c) in col.iter_mut().enumerate() {
                *c *= table[j * half + i];
            }
            self.iy.process(col);
        });
        for j in 0..ny {
            for i in 0..half {
                spec[j * half + i] = t[i * ny + j];
            }
        }
        let norm = 1.0 / (nx * ny) as f64;
        let mut out = vec![0.0; nx * ny];
        par::for_each_row(&mut out, nx, |j, row| {
            let s = &mut spec[j * half..(j + 1) * half].to_vec();
            s[0].im = 0.0;
            if nx % 2 == 0 {
                s[half - 1].im = 0.0;
            }
            let _ = self.c2r.process(s, row);
            row.iter_mut().for_each(|x| *x *= norm);
        });
        out
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    /// Continuous wavenumbers `(kx, ky)` of mode `(mx, my)`.
    pub fn wavenumber(&self, mx: usize, my: usize) -> [f64; 2] {
        [
            signed_wavenumber(mx, self.grid.nx, self.grid.lx),
            signed_wavenumber(my, self.grid.ny, self.grid.ly),
        ]
    }

    /// Derivative symbols `(sin(kx hx)/hx, sin(ky hy)/hy)`.
    #[inline]
    pub fn symbol(&self, mx: usize, my: usize) -> [f64; 2] {
        [self.ax[mx], self.ay[my]]
    }

    fn is_null(&self, mx: usize, my: usize) -> bool {
        let [a, b] = self.symbol(mx, my);
        let scale =
            1.0 / (self.grid.hx() * self.grid.hx()) + 1.0 / (self.grid.hy() * self.grid.hy());
        a * a + b * b <= NULL_SYMBOL_TOL * scale
    }

    fn columns(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut t = vec![Complex64::new(0.0, 0.0); nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                t[i * ny + j] = data[j * nx + i];
            }
        }
        par::for_each_row(&mut t, ny, |_, col| plan.process(col));
        for j in 0..ny {
            for i in 0..nx {
                data[j * nx + i] = t[i * ny + j];
            }
        }
    }

    pub fn forward(&self, f: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        par::for_each_row(&mut data, self.grid.nx, |_, row| self.fx.process(row));
        self.columns(&mut data, &self.fy);
        data
    }

    /// Inverse transform, normalised, real part.
    pub fn inverse(&self, mut data: Vec<Complex64>) -> Vec<f64> {
        par::for_each_row(&mut data, self.grid.nx, |_, row| self.ix.process(row));
        self.columns(&mut data, &self.iy);
        let norm = 1.0 / self.grid.len() as f64;
        data.iter().map(|c| c.re * norm).collect()
    }

    /// Multiply every mode by `m(mx, my)`.
    pub fn apply_multiplier<F>(&self, f: &ScalarField, m: F) -> ScalarField
    where
        F: Fn(usize, usize) -> Complex64 + Sync + Send,
    {
        let nx = self.grid.nx;
        let mut s = self.forward(&f.values);
        par::for_each_row(&mut s, nx, |my, row| {
            for (mx, c) in row.iter_mut().enumerate() {
                *c *= m(mx, my);
            }
        });
        ScalarField {
            grid: self.grid,
            values: self.inverse(s),
        }
    }

    /// Solve `-L ψ = rhs` for the composed central Laplacian `L = Dx Dx + Dy Dy`,
    /// with null-space components of the result set to zero.
    pub fn solve_neg_laplacian(&self, rhs: &ScalarField) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.real_multiplier(&rhs.values, &self.inv_lap),
        }
    }

    /// Apply `-L` spectrally (used as a cross-check of the stencil path).
    pub fn neg_laplacian(&self, f: &ScalarField) -> ScalarField {
        self.apply_multiplier(f, |mx, my| {
            let [a, b] = self.symbol(mx, my);
            Complex64::new(a * a + b * b, 0.0)
        })
    }

    /// Helmholtz projection onto discretely divergence-free fields.
    ///
    /// Returns `(P w, φ)` with `w = P w + grad φ` and `div(P w) = 0` for the
    /// central stencils. Null-space modes are left in `P w`.
    pub fn project_divergence_free(&self, w: &VectorField2) -> (VectorField2, ScalarField) {
        let nx = self.grid.nx;
        let mut su = self.forward(&w.u);
        let mut sv = self.forward(&w.v);
        let mut sphi = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        {
            let rows_u = su.chunks_mut(nx);
            let rows_v = sv.chunks_mut(nx);
            let rows_p = sphi.chunks_mut(nx);
            for (my, ((ru, rv), rp)) in rows_u.zip(rows_v).zip(rows_p).enumerate() {
                for mx in 0..nx {
                    if self.is_null(mx, my) {
                        continue;
                    }
                    let [a, b] = self.symbol(mx, my);
                    let a2 = a * a + b * b;
                    let adotw = ru[mx] * a + rv[mx] * b;
                    // grad φ has symbol i a, so φ̂ = -i (a·ŵ)/|a|².
                    rp[mx] = Complex64::new(0.0, -1.0) * adotw / a2;
                    ru[mx] -= adotw * (a / a2);
                    rv[mx] -= adotw * (b / a2);
                }
            }
        }
        let projected = VectorField2 {
            grid: self.grid,
            u: self.inverse(su),
            v: self.inverse(sv),
        };
        let phi = ScalarField {
            grid: self.grid,
            values: self.inverse(sphi),
        };
        (projected, phi)
    }
}

/// Remove the components of `f` along the null space of the central
/// gradient: the constant and, for even sizes, the checkerboard modes
/// `(-1)^i`, `(-1)^j`, `(-1)^{i+j}`.
pub fn remove_gradient_null_space(f: &mut ScalarField) {
    let g = f.grid;
    if !g.is_periodic() {
        f.remove_mean();
        return;
    }
    let (nx, ny) = (g.nx, g.ny);
    let (ex, ey) = (nx % 2 == 0, ny % 2 == 0);
    let alt = |i: usize| if i % 2 == 1 { -1.0 } else { 1.0 };
    // Per row: Σ f and Σ (-1)^i f; combined in row order.
    let rows: Vec<usize> = (0..ny).collect();
    let partial = par::map_items(&rows, |&j| {
        let row = &f.values[j * nx..(j + 1) * nx];
        let plain: f64 = row.iter().sum();
        let signed: f64 = row.iter().enumerate().map(|(i, x)| alt(i) * x).sum();
        (plain, signed)
    });
    let n = g.len() as f64;
    let mut c = [0.0; 4];
    for (j, (plain, signed)) in partial.iter().enumerate() {
        c[0] += plain;
        c[1] += signed;
        c[2] += alt(j) * plain;
        c[3] += alt(j) * signed;
    }
    let c00 = c[0] / n;
    let c10 = if ex { c[1] / n } else { 0.0 };
    let c01 = if ey { c[2] / n } else { 0.0 };
    let c11 = if ex && ey { c[3] / n } else { 0.0 };
    par::for_each_row(&mut f.values, nx, |j, row| {
        let sj = alt(j);
        let (even, odd) = (
            c00 + c01 * sj + c10 + c11 * sj,
            c00 + c01 * sj - c10 - c11 * sj,
        );
        for (i, x) in row.iter_mut().enumerate() {
            *x -= if i % 2 == 1 { odd } else { even };
        }
    });
}
