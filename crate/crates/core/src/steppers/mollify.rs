//! Convolution with the normalised bump `exp(-1/(1-|x|²))`.

use crate::fields::{Grid2D, ScalarField, VectorField2};
use crate::par;
use crate::spectral::Spectral;

/// Discrete mollifier of width `eps` on a grid: the bump sampled at grid
/// offsets and normalised to unit discrete mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Mollifier {
    grid: Grid2D,
    offsets: Vec<(isize, isize)>,
    weights: Vec<f64>,
}

fn bump(r2: f64) -> f64 {
    if r2 < 1.0 {
        (-1.0 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

impl Mollifier {
    pub fn new(grid: Grid2D, eps: f64) -> Self {
        let mut offsets = vec![(0, 0)];
        let mut weights = vec![1.0];
        if eps > 0.0 {
            let (hx, hy) = (grid.hx(), grid.hy());
            let (rx, ry) = ((eps / hx).ceil() as isize, (eps / hy).ceil() as isize);
            offsets.clear();
            weights.clear();
            for b in -ry..=ry {
                for a in -rx..=rx {
                    let (x, y) = (a as f64 * hx / eps, b as f64 * hy / eps);
                    let w = bump(x * x + y * y);
                    if w > 0.0 {
                        offsets.push((a, b));
                        weights.push(w);
                    }
                }
            }
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
        }
        Self {
            grid,
            offsets,
            weights,
        }
    }

    /// True when the stencil is the single centre point.
    pub fn is_identity(&self) -> bool {
        self.offsets.len() == 1
    }

    pub fn weights(&self) -> impl Iterator<Item = ((isize, isize), f64)> + '_ {
        self.offsets
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
    }

    /// Direct convolution. Periodic grids wrap; Dirichlet grids replicate
    /// the edge values.
    pub fn apply_stencil(&self, f: &ScalarField) -> ScalarField {
        if self.is_identity() {
            return f.clone();
        }
        let g = f.grid;
        let (nx, ny) = (g.nx as isize, g.ny as isize);
        let periodic = g.is_periodic();
        let fold = |m: isize, n: isize| {
            if periodic {
                m.rem_euclid(n)
            } else {
                m.clamp(0, n - 1)
            }
        };
        let values = par::collect(g.len(), |k| {
            let (i, j) = ((k % g.nx) as isize, (k / g.nx) as isize);
            self.offsets
                .iter()
                .zip(&self.weights)
                .map(|(&(a, b), w)| w * f.values[(fold(j - b, ny) * nx + fold(i - a, nx)) as usize])
                .sum()
        });
        ScalarField { grid: g, values }
    }

    /// Convolution by Fourier multiplication (periodic grids).
    pub fn apply_fft(&self, spectral: &Spectral, f: &ScalarField) -> ScalarField {
        if self.is_identity() {
            return f.clone();
        }
        let g = f.grid;
        let mut kernel = vec![0.0; g.len()];
        for (&(a, b), w) in self.offsets.iter().zip(&self.weights) {
            let i = a.rem_euclid(g.nx as isize) as usize;
            let j = b.rem_euclid(g.ny as isize) as usize;
            kernel[j * g.nx + i] += w;
        }
        let k_hat = spectral.forward(&kernel);
        let nx = g.nx;
        spectral.apply_multiplier(f, |mx, my| k_hat[my * nx + mx])
    }

    pub fn apply_vec(&self, w: &VectorField2) -> VectorField2 {
        if self.is_identity() {
            return w.clone();
        }
        VectorField2 {
            grid: w.grid,
            u: self.apply_stencil(&w.u_field()).values,
            v: self.apply_stencil(&w.v_field()).values,
        }
    }

    /// Grid this mollifier was built for.
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }
}

/// `J_ε * f` by direct convolution (`ε = 0` is the identity).
pub fn mollify(f: &ScalarField, eps: f64) -> ScalarField {
    Mollifier::new(f.grid, eps).apply_stencil(f)
}

/// `J_ε * w` componentwise.
pub fn mollify_vec(w: &VectorField2, eps: f64) -> VectorField2 {
    Mollifier::new(w.grid, eps).apply_vec(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{div, lp_norm, perp_grad};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: Grid2D, rng: &mut ChaCha8Rng) -> ScalarField {
        ScalarField {
            grid,
            values: (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        }
    }

    #[test]
    fn zero_width_is_identity() {
        let grid = Grid2D::periodic_2pi(16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_field(grid, &mut rng);
        assert_eq!(mollify(&f, 0.0), f);
        // Narrower than a cell: only the centre sample survives.
        assert_eq!(mollify(&f, 0.5 * grid.hx()), f);
    }

    #[test]
    fn stencil_and_fft_agree() {
        let grid = Grid2D::periodic(32, 24, 2.0, 1.5).unwrap();
        let spectral = Spectral::new(grid);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_field(grid, &mut rng);
        for eps in [0.1, 0.25, 0.6] {
            let m = Mollifier::new(grid, eps);
            let a = m.apply_stencil(&f);
            let b = m.apply_fft(&spectral, &f);
            assert!(a.sub(&b).max_abs() < 1e-10, "eps {eps}");
        }
    }

    #[test]
    fn young_inequality_and_divergence() {
        let grid = Grid2D::periodic_2pi(32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let f = random_field(grid, &mut rng);
            let eps = rng.gen_range(0.1..0.8);
            let g = mollify(&f, eps);
            for p in [1.5, 2.0, 3.0] {
                assert!(lp_norm(&g, p).unwrap() <= lp_norm(&f, p).unwrap() * (1.0 + 1e-10));
            }
            let w = perp_grad(&f);
            let scale = w.max_magnitude() / grid.hx();
            assert!(div(&mollify_vec(&w, eps)).max_abs() <= 1e-12 * scale);
        }
    }
}
