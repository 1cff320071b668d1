//! Pressureless geodesics of particle clouds and the optimal-map residual.

use crate::error::{Error, Result};
use crate::fields::{dx, dy, grad, ScalarField, VectorField2};
use crate::par;
use crate::pmomentum::{q_power, PExponent};

/// Weighted particles moving with constant velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleCloud {
    pub positions: Vec<[f64; 2]>,
    pub velocities: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl ParticleCloud {
    pub fn new(
        positions: Vec<[f64; 2]>,
        velocities: Vec<[f64; 2]>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if positions.len() != velocities.len() || positions.len() != weights.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} positions, {} velocities, {} weights",
                positions.len(),
                velocities.len(),
                weights.len()
            )));
        }
        if positions.is_empty() {
            return Err(Error::InvalidParameter("empty particle cloud".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidParameter(
                "weights must be nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(Self {
            positions,
            velocities,
            weights,
        })
    }

    /// `n × n` equal-weight particles at cell centres of the unit square,
    /// with velocity `vel(x)`.
    pub fn uniform_square<F: Fn([f64; 2]) -> [f64; 2]>(n: usize, vel: F) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "need at least one particle per side".into(),
            ));
        }
        let h = 1.0 / n as f64;
        let positions: Vec<[f64; 2]> = (0..n * n)
            .map(|k| [((k % n) as f64 + 0.5) * h, ((k / n) as f64 + 0.5) * h])
            .collect();
        let velocities = positions.iter().map(|&x| vel(x)).collect();
        let weights = vec![1.0 / (n * n) as f64; n * n];
        Self::new(positions, velocities, weights)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Positions `x + t·v` at `t ∈ [0, 1]`; velocities and weights are kept.
pub fn geodesic_transport(pc: &ParticleCloud, t: f64) -> Result<ParticleCloud> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParameter(format!(
            "geodesic time must lie in [0, 1], got {t}"
        )));
    }
    let positions = pc
        .positions
        .iter()
        .zip(&pc.velocities)
        .map(|(x, v)| [x[0] + t * v[0], x[1] + t * v[1]])
        .collect();
    Ok(ParticleCloud {
        positions,
        velocities: pc.velocities.clone(),
        weights: pc.weights.clone(),
    })
}

/// `Σ w |v|^p`, the transport cost of the map `x ↦ x + v`.
pub fn wasserstein_p_cost(pc: &ParticleCloud, p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    Ok(pc
        .weights
        .iter()
        .zip(&pc.velocities)
        .map(|(w, v)| w * v[0].hypot(v[1]).powf(p))
        .sum())
}

/// `Σ w |v|^p / q`, the cloud's p-Hamiltonian.
pub fn cloud_hamiltonian(pc: &ParticleCloud, p: f64) -> Result<f64> {
    let e = PExponent::new(p)?;
    Ok(wasserstein_p_cost(pc, p)? / e.q())
}

/// `det(∇T) ρ1(T(x)) - ρ0(x)` with `T(x) = x - |∇ψ|^{q-2}∇ψ` and the
/// Jacobian from the grid difference operators.
pub fn optimal_map_residual<F>(
    psi: &ScalarField,
    rho0: &ScalarField,
    rho1: F,
    p: f64,
) -> Result<ScalarField>
where
    F: Fn([f64; 2]) -> f64 + Sync + Send,
{
    let e = PExponent::new(p)?;
    if psi.grid != rho0.grid {
        return Err(Error::ShapeMismatch(
            "potential and density grids differ".into(),
        ));
    }
    let disp: VectorField2 = q_power(&grad(psi), e);
    let (du, dv) = (disp.u_field(), disp.v_field());
    let (uxx, uxy, vyx, vyy) = (dx(&du), dy(&du), dx(&dv), dy(&dv));
    let g = psi.grid;
    let values = par::collect(g.len(), |k| {
        let x = g.point(k);
        let det = (1.0 - uxx.values[k]) * (1.0 - vyy.values[k]) - uxy.values[k] * vyx.values[k];
        let t = [x[0] - disp.u[k], x[1] - disp.v[k]];
        det * rho1(t) - rho0.values[k]
    });
    Ok(ScalarField { grid: g, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{curl2, Grid2D};
    use crate::pmomentum::p_power;

    #[test]
    fn translation_cost_and_hamiltonian() {
        let a = 0.7;
        let pc = ParticleCloud::uniform_square(16, |_| [a, 0.0]).unwrap();
        for p in [1.5, 2.0, 3.0, 4.5] {
            let c = wasserstein_p_cost(&pc, p).unwrap();
            assert!((c - a.powf(p)).abs() <= 1e-13 * c);
        }
        assert_eq!(geodesic_transport(&pc, 0.0).unwrap(), pc);
        let moved = geodesic_transport(&pc, 1.0).unwrap();
        for (x, y) in pc.positions.iter().zip(&moved.positions) {
            assert_eq!(y[0], x[0] + a);
            assert_eq!(y[1], x[1]);
        }
        assert!(geodesic_transport(&pc, 1.5).is_err());
    }

    #[test]
    fn cost_is_constant_along_the_geodesic() {
        let pc = ParticleCloud::uniform_square(9, |x| [x[1] - 0.5, 0.3 * x[0]]).unwrap();
        let h0 = cloud_hamiltonian(&pc, 3.0).unwrap();
        for t in [0.1, 0.5, 0.9] {
            let moved = geodesic_transport(&pc, t).unwrap();
            assert_eq!(cloud_hamiltonian(&moved, 3.0).unwrap(), h0);
        }
    }

    #[test]
    fn cloud_validation() {
        assert!(ParticleCloud::new(vec![[0.0; 2]], vec![[0.0; 2]], vec![0.5]).is_err());
        assert!(ParticleCloud::new(vec![[0.0; 2]; 2], vec![[0.0; 2]; 2], vec![1.5, -0.5]).is_err());
        assert!(ParticleCloud::new(vec![[0.0; 2]], vec![], vec![1.0]).is_err());
    }

    #[test]
    fn zero_potential_gives_density_difference() {
        let g = Grid2D::periodic(16, 16, 1.0, 1.0).unwrap();
        let rho0 = ScalarField::from_fn(g, |x, y| 1.0 + 0.5 * (6.0 * x).sin() * y);
        let rho1 = |x: [f64; 2]| 1.0 + x[0] * x[1];
        let r = optimal_map_residual(&ScalarField::zeros(g), &rho0, rho1, 3.0).unwrap();
        for k in 0..g.len() {
            assert_eq!(r.values[k], rho1(g.point(k)) - rho0.values[k]);
        }
    }

    #[test]
    fn linear_contraction_is_exact() {
        // ψ = cx²/2 with p = 2 gives T(x) = (1 - c)x.
        let c = 0.3;
        let g = Grid2D::dirichlet(50, 4, 1.0, 0.08).unwrap();
        let psi = ScalarField::from_fn(g, |x, _| 0.5 * c * x * x);
        let rho0 = ScalarField::constant(g, 1.0);
        let rho1 = |y: [f64; 2]| {
            if (0.0..=1.0 - c).contains(&y[0]) {
                1.0 / (1.0 - c)
            } else {
                0.0
            }
        };
        let r = optimal_map_residual(&psi, &rho0, rho1, 2.0).unwrap();
        assert!(r.max_abs() < 1e-12, "{}", r.max_abs());
    }

    #[test]
    fn gradient_momentum_has_no_curl() {
        let g = Grid2D::periodic_2pi(32).unwrap();
        let psi = ScalarField::from_fn(g, |x, y| x.sin() * (2.0 * y).cos() + 0.3 * (x + y).cos());
        let mut vp = grad(&psi);
        vp = vp.scaled(-1.0);
        assert!(curl2(&vp).max_abs() < 1e-13);
        // The velocity behind it, q_power(v_p), is not a gradient in general,
        // but mapping back recovers v_p.
        let e = PExponent::new(3.0).unwrap();
        let back = p_power(&q_power(&vp, e), e);
        assert!(back.sub(&vp).max_magnitude() < 1e-12);
    }
}
