//! Bicubic (4-point Lagrange) interpolation on grid samples.
//!
//! Periodic grids wrap the stencil; Dirichlet grids clamp it to the
//! interior so edge evaluations extrapolate with the nearest full stencil.

use crate::fields::{Grid2D, VectorField2};

/// Lagrange weights for nodes `-1, 0, 1, 2` at offset `t`.
#[inline]
pub fn weights(t: f64) -> [f64; 4] {
    let (tm, t1, t2) = (t + 1.0, t - 1.0, t - 2.0);
    [
        -t * t1 * t2 / 6.0,
        tm * t1 * t2 / 2.0,
        -tm * t * t2 / 2.0,
        tm * t * t1 / 6.0,
    ]
}

#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    pub ix: [usize; 4],
    pub iy: [usize; 4],
    pub wx: [f64; 4],
    pub wy: [f64; 4],
}

fn axis(s: f64, n: usize, periodic: bool) -> ([usize; 4], [f64; 4]) {
    let base = s.floor();
    let mut t = s - base;
    let mut i0 = base as i64;
    if !periodic {
        let clamped = i0.clamp(1, n as i64 - 3);
        t += (i0 - clamped) as f64;
        i0 = clamped;
    }
    let n = n as i64;
    let first = if i0 >= 1 && i0 + 2 < n {
        i0 - 1
    } else {
        (i0 - 1).rem_euclid(n)
    };
    let idx = std::array::from_fn(|m| {
        let k = first + m as i64;
        (if k >= n { k - n } else { k }) as usize
    });
    (idx, weights(t))
}

/// Stencil at fractional index coordinates `(sx, sy)`, where integer
/// values land exactly on samples.
#[inline]
pub fn stencil_index(grid: &Grid2D, sx: f64, sy: f64) -> Stencil {
    let periodic = grid.is_periodic();
    let (ix, wx) = axis(sx, grid.nx, periodic);
    let (iy, wy) = axis(sy, grid.ny, periodic);
    Stencil { ix, iy, wx, wy }
}

/// Fractional index coordinates of a physical point.
#[inline]
pub fn index_coords(grid: &Grid2D, p: [f64; 2]) -> (f64, f64) {
    let off = if grid.is_periodic() { 0.0 } else { 0.5 };
    (p[0] / grid.hx() - off, p[1] / grid.hy() - off)
}

#[inline]
pub fn stencil(grid: &Grid2D, p: [f64; 2]) -> Stencil {
    let (sx, sy) = index_coords(grid, p);
    stencil_index(grid, sx, sy)
}

/// Evaluate `values` with a precomputed stencil. Differences are taken
/// against one sample so constants are reproduced bit for bit.
#[inline]
pub fn eval(values: &[f64], nx: usize, s: &Stencil) -> f64 {
    let reference = values[s.iy[1] * nx + s.ix[1]];
    let mut acc = 0.0;
    for b in 0..4 {
        let row = s.iy[b] * nx;
        let mut r = 0.0;
        for a in 0..4 {
            r += s.wx[a] * (values[row + s.ix[a]] - reference);
        }
        acc += s.wy[b] * r;
    }
    reference + acc
}

pub fn sample(values: &[f64], grid: &Grid2D, p: [f64; 2]) -> f64 {
    eval(values, grid.nx, &stencil(grid, p))
}

pub fn sample_vec(w: &VectorField2, p: [f64; 2]) -> [f64; 2] {
    let s = stencil(&w.grid, p);
    [eval(&w.u, w.grid.nx, &s), eval(&w.v, w.grid.nx, &s)]
}
