//! Uniform-grid discrete calculus on periodic or Dirichlet rectangles.
//!
//! Storage is row-major with the y-index outer: value `(i, j)` lives at
//! `j * nx + i`. Periodic grids sample nodes `x_i = i hx`; Dirichlet grids
//! sample cell centres `x_i = (i + 1/2) hx` and close the stencils with
//! one-sided second-order differences at the edges.

mod ops;

pub use ops::{curl2, div, dx, dy, grad, integrate, lp_norm, lp_norm_pow, perp_grad, Magnitude};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Periodic,
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub bc: Boundary,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64, bc: Boundary) -> Result<Self> {
        if nx < 4 || ny < 4 {
            return Err(Error::InvalidGrid(format!(
                "need nx, ny >= 4, got {nx}x{ny}"
            )));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "extents must be positive, got {lx}x{ly}"
            )));
        }
        Ok(Self { nx, ny, lx, ly, bc })
    }

    pub fn periodic(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        Self::new(nx, ny, lx, ly, Boundary::Periodic)
    }

    pub fn dirichlet(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        Self::new(nx, ny, lx, ly, Boundary::Dirichlet)
    }

    /// Square periodic box `[0, 2π)²`.
    pub fn periodic_2pi(n: usize) -> Result<Self> {
        let l = 2.0 * std::f64::consts::PI;
        Self::periodic(n, n, l, l)
    }

    #[inline]
    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    #[inline]
    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn is_periodic(&self) -> bool {
        self.bc == Boundary::Periodic
    }

    fn offset(&self) -> f64 {
        match self.bc {
            Boundary::Periodic => 0.0,
            Boundary::Dirichlet => 0.5,
        }
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + self.offset()) * self.hx()
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        (j as f64 + self.offset()) * self.hy()
    }

    /// Coordinates of flat index `k`.
    #[inline]
    pub fn point(&self, k: usize) -> [f64; 2] {
        [self.x(k % self.nx), self.y(k / self.nx)]
    }

    pub fn center(&self) -> [f64; 2] {
        [0.5 * self.lx, 0.5 * self.ly]
    }

    /// Wrap a point into the fundamental domain (periodic grids only).
    pub fn wrap(&self, p: [f64; 2]) -> [f64; 2] {
        if !self.is_periodic() {
            return p;
        }
        [p[0].rem_euclid(self.lx), p[1].rem_euclid(self.ly)]
    }

    /// Minimal-image displacement `b - a`.
    pub fn displacement(&self, a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
        let mut d = [b[0] - a[0], b[1] - a[1]];
        if self.is_periodic() {
            d[0] -= self.lx * (d[0] / self.lx).round();
            d[1] -= self.ly * (d[1] / self.ly).round();
        }
        d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid2D,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid2D, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_values(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Sample `f(x, y)` at the grid points.
    pub fn from_fn<F>(grid: Grid2D, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Sync + Send,
    {
        let values = crate::par::collect(grid.len(), |k| {
            let [x, y] = grid.point(k);
            f(x, y)
        });
        Self { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn mean(&self) -> f64 {
        integrate(self) / self.grid.area()
    }

    /// Subtract the mean in place.
    pub fn remove_mean(&mut self) {
        let m = self.mean();
        self.values.iter_mut().for_each(|v| *v -= m);
    }

    pub fn max_abs(&self) -> f64 {
        crate::par::max(self.values.len(), |k| self.values[k].abs())
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }

    /// `self + a * other`
    pub fn axpy(&self, a: f64, other: &ScalarField) -> Self {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x + a * y)
            .collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    pub fn sub(&self, other: &ScalarField) -> Self {
        self.axpy(-1.0, other)
    }

    /// Discrete L² inner product `Σ f g hx hy`.
    pub fn dot(&self, other: &ScalarField) -> f64 {
        let n = self.values.len();
        crate::par::sum(n, self.grid.nx, |k| self.values[k] * other.values[k])
            * self.grid.cell_area()
    }

    pub fn l2_norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField2 {
    pub grid: Grid2D,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl VectorField2 {
    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            u: vec![0.0; grid.len()],
            v: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid2D, c: [f64; 2]) -> Self {
        Self {
            grid,
            u: vec![c[0]; grid.len()],
            v: vec![c[1]; grid.len()],
        }
    }

    pub fn from_components(u: ScalarField, v: ScalarField) -> Result<Self> {
        if u.grid != v.grid {
            return Err(Error::ShapeMismatch("component grids differ".into()));
        }
        Ok(Self {
            grid: u.grid,
            u: u.values,
            v: v.values,
        })
    }

    pub fn from_fn<F>(grid: Grid2D, f: F) -> Self
    where
        F: Fn(f64, f64) -> [f64; 2] + Sync + Send,
    {
        let u = crate::par::collect(grid.len(), |k| {
            let [x, y] = grid.point(k);
            f(x, y)[0]
        });
        let v = crate::par::collect(grid.len(), |k| {
            let [x, y] = grid.point(k);
            f(x, y)[1]
        });
        Self { grid, u, v }
    }

    #[inline]
    pub fn at(&self, k: usize) -> [f64; 2] {
        [self.u[k], self.v[k]]
    }

    pub fn u_field(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.u.clone(),
        }
    }

    pub fn v_field(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.v.clone(),
        }
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> ScalarField {
        let values = crate::par::collect(self.grid.len(), |k| self.u[k].hypot(self.v[k]));
        ScalarField {
            grid: self.grid,
            values,
        }
    }

    pub fn max_magnitude(&self) -> f64 {
        crate::par::max(self.grid.len(), |k| self.u[k].hypot(self.v[k]))
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            u: self.u.iter().map(|x| a * x).collect(),
            v: self.v.iter().map(|x| a * x).collect(),
        }
    }

    pub fn axpy(&self, a: f64, other: &VectorField2) -> Self {
        Self {
            grid: self.grid,
            u: self
                .u
                .iter()
                .zip(&other.u)
                .map(|(x, y)| x + a * y)
                .collect(),
            v: self
                .v
                .iter()
                .zip(&other.v)
                .map(|(x, y)| x + a * y)
                .collect(),
        }
    }

    pub fn sub(&self, other: &VectorField2) -> Self {
        self.axpy(-1.0, other)
    }

    /// Discrete L² inner product of two vector fields.
    pub fn dot(&self, other: &VectorField2) -> f64 {
        let n = self.grid.len();
        crate::par::sum(n, self.grid.nx, |k| {
            self.u[k] * other.u[k] + self.v[k] * other.v[k]
        }) * self.grid.cell_area()
    }

    pub fn l2_norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Component-wise integrals.
    pub fn integral(&self) -> [f64; 2] {
        [integrate(&self.u_field()), integrate(&self.v_field())]
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|v| v.is_finite())
    }
}

/// Pointwise 2×2 tensor field, components stored as separate arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField2 {
    pub grid: Grid2D,
    pub xx: Vec<f64>,
    pub xy: Vec<f64>,
    pub yx: Vec<f64>,
    pub yy: Vec<f64>,
}

impl TensorField2 {
    pub fn identity(grid: Grid2D) -> Self {
        let n = grid.len();
        Self {
            grid,
            xx: vec![1.0; n],
            xy: vec![0.0; n],
            yx: vec![0.0; n],
            yy: vec![1.0; n],
        }
    }

    #[inline]
    pub fn at(&self, k: usize) -> [[f64; 2]; 2] {
        [[self.xx[k], self.xy[k]], [self.yx[k], self.yy[k]]]
    }

    /// Velocity-gradient tensor `(∂_i w_j)`: row index is the derivative
    /// direction.
    pub fn gradient_of(w: &VectorField2) -> Self {
        let wu = w.u_field();
        let wv = w.v_field();
        Self {
            grid: w.grid,
            xx: dx(&wu).values,
            xy: dx(&wv).values,
            yx: dy(&wu).values,
            yy: dy(&wv).values,
        }
    }

    /// Pointwise Frobenius norm.
    pub fn frobenius(&self) -> ScalarField {
        let values = crate::par::collect(self.grid.len(), |k| {
            (self.xx[k] * self.xx[k]
                + self.xy[k] * self.xy[k]
                + self.yx[k] * self.yx[k]
                + self.yy[k] * self.yy[k])
                .sqrt()
        });
        ScalarField {
            grid: self.grid,
            values,
        }
    }
}

pub(crate) fn check_same_grid(a: &Grid2D, b: &Grid2D) -> Result<()> {
    if a != b {
        return Err(Error::ShapeMismatch(format!(
            "grids differ: {a:?} vs {b:?}"
        )));
    }
    Ok(())
}
