//! Exact and semi-exact solutions and structural checks: Barenblatt
//! profiles, scaling and Galilean transforms, pressureless geodesics,
//! the optimal-map residual and the Bernoulli residuals.

mod barenblatt;
mod checks;
mod geodesic;

pub use barenblatt::{
    barenblatt_profile, beta_critical, doubly_degenerate_dt_cap, evolve_doubly_degenerate,
    step_doubly_degenerate, BarenblattParams, ProfileKind, DIFFUSION_BETA,
};
pub use checks::{bernoulli_residual, galilean_check, rescale, scaling_exponent};
pub use geodesic::{
    cloud_hamiltonian, geodesic_transport, optimal_map_residual, wasserstein_p_cost, ParticleCloud,
};
