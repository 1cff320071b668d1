#![allow(dead_code)]

use pflow::{Grid2D, ScalarField, VectorField2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Smooth periodic field from a handful of random low modes.
pub fn smooth_scalar(grid: Grid2D, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            (
                f64::from(rng.gen_range(-3i32..=3)),
                f64::from(rng.gen_range(-3i32..=3)),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let (kx, ky) = (
        std::f64::consts::TAU / grid.lx,
        std::f64::consts::TAU / grid.ly,
    );
    ScalarField::from_fn(grid, move |x, y| {
        modes
            .iter()
            .map(|&(a, b, c, ph)| c * (a * kx * x + b * ky * y + ph).sin())
            .sum()
    })
}

pub fn smooth_vector(grid: Grid2D, seed: u64) -> VectorField2 {
    VectorField2::from_components(
        smooth_scalar(grid, seed),
        smooth_scalar(grid, seed ^ 0x9e37),
    )
    .unwrap()
}

/// Independent uniform values in `[-a, a]`.
pub fn noise_vector(grid: Grid2D, a: f64, seed: u64) -> VectorField2 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.len();
    VectorField2 {
        grid,
        u: (0..n).map(|_| rng.gen_range(-a..a)).collect(),
        v: (0..n).map(|_| rng.gen_range(-a..a)).collect(),
    }
}
