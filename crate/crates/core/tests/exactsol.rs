use pflow::exactsol::*;
use pflow::fields::{integrate, Grid2D, ScalarField};
use pflow::plaplacian::PlapConfig;

/// Linear interpolation of the x-profile (row 0) at `x`.
fn sample_row(f: &ScalarField, x: f64) -> f64 {
    let g = f.grid;
    let s = x / g.hx() - 0.5;
    if s <= 0.0 || s >= (g.nx - 1) as f64 {
        return 0.0;
    }
    let i = s.floor() as usize;
    let w = s - i as f64;
    (1.0 - w) * f.values[i] + w * f.values[i + 1]
}

#[test]
fn barenblatt_self_similar_collapse() {
    let (p, m) = (3.0, 1.0);
    let bp = BarenblattParams::new(p, m, 1).unwrap();
    let beta = bp.beta_c;
    let (len, nx) = (12.0, 600);
    let grid = Grid2D::dirichlet(nx, 4, len, 4.0 * len / nx as f64).unwrap();
    let c = 0.5 * len;
    let sigma: f64 = 0.05;
    let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let rho0 = ScalarField::from_fn(grid, |x, _| norm * (-0.5 * ((x - c) / sigma).powi(2)).exp());
    let cfg = PlapConfig::default();
    let mass0 = integrate(&rho0);
    let (rho1, n1) = evolve_doubly_degenerate(&rho0, p, m, 0.0, 1.0, 0.9, &cfg).unwrap();
    let (rho2, n2) = evolve_doubly_degenerate(&rho1, p, m, 1.0, 2.0, 0.9, &cfg).unwrap();
    for r in [&rho1, &rho2] {
        assert!((integrate(r) - mass0).abs() <= 1e-13 * mass0);
    }
    // Rescaled profiles on a ξ grid.
    let xi: Vec<f64> = (0..2001).map(|i| -5.0 + 0.005 * i as f64).collect();
    let dxi = 0.005;
    let rescaled = |r: &ScalarField, t: f64| -> Vec<f64> {
        let s = t.powf(beta);
        xi.iter().map(|&z| s * sample_row(r, c + z * s)).collect()
    };
    let (u1, u2) = (rescaled(&rho1, 1.0), rescaled(&rho2, 2.0));
    let exact: Vec<f64> = xi.iter().map(|&z| bp.profile(z)).collect();
    let l1 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * dxi;
    let ex_l1 = l1(&exact, &vec![0.0; exact.len()]);
    let (d12, d1, d2) = (
        l1(&u1, &u2) / ex_l1,
        l1(&u1, &exact) / ex_l1,
        l1(&u2, &exact) / ex_l1,
    );
    println!("steps {n1} {n2} collapse {d12:e} profile {d1:e} {d2:e}");
    assert!(d12 <= 0.02);
    assert!(d1 <= 0.05 && d2 <= 0.05);
}

/// Max residual of `ρ_t = (|ρ_x|ρ_x)_x` for the exact compact profile at
/// `t = 1`, away from the support edge.
fn profile_residual(nx: usize, lo: f64, hi: f64) -> f64 {
    let (p, m) = (3.0, 1.0);
    let bp = BarenblattParams::new(p, m, 1).unwrap();
    let len = 8.0;
    let grid = Grid2D::dirichlet(nx, 4, len, 4.0 * len / nx as f64).unwrap();
    let c = 0.5 * len;
    let exact = |t: f64| ScalarField::from_fn(grid, move |x, _| bp.density(x - c, t));
    let cfg = PlapConfig {
        delta: 0.0,
        ..PlapConfig::default()
    };
    let rho = exact(1.0);
    let dt = 0.5 * doubly_degenerate_dt_cap(&rho, p, m, &cfg);
    let next = step_doubly_degenerate(&rho, p, m, dt, &cfg).unwrap();
    let tau = 1e-5;
    let (a, b) = (exact(1.0 + tau), exact(1.0 - tau));
    let r = bp.support_radius().unwrap();
    let h = grid.hx();
    (0..nx)
        .filter(|&i| {
            let s = (grid.x(i) - c).abs();
            s >= lo && s <= (hi.min(r - 3.0 * h))
        })
        .map(|i| {
            ((a.values[i] - b.values[i]) / (2.0 * tau) - (next.values[i] - rho.values[i]) / dt)
                .abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn barenblatt_profile_solves_the_equation() {
    let coarse = profile_residual(400, 0.3, 10.0);
    let fine = profile_residual(800, 0.3, 10.0);
    println!("residual {coarse:e} {fine:e}");
    assert!(fine < coarse / 3.0);
    assert!(fine < 1e-3);
}

#[test]
fn nonlinear_monge_ampere_second_order() {
    // p = 3 and the map T(x) = x - a sin(x + s) on [0, 1]: the displacement
    // |ψ'|^{q-2}ψ' equals a sin(x + s) when ψ' = a² sin²(x + s). The shift
    // keeps the displacement away from zero, where its q-th root is not
    // smooth.
    let (a, sh): (f64, f64) = (0.4, 0.5);
    let p = 3.0;
    let err = |nx: usize| {
        let grid = Grid2D::dirichlet(nx, 4, 1.0, 4.0 / nx as f64).unwrap();
        let psi = ScalarField::from_fn(grid, |x, _| {
            a * a * (0.5 * x - 0.25 * (2.0 * (x + sh)).sin())
        });
        let rho0 = ScalarField::from_fn(grid, |x, _| 1.0 + 0.5 * x);
        // ρ1(T(x)) T'(x) = ρ0(x), with T inverted by Newton.
        let rho1 = move |y: [f64; 2]| {
            let mut x = y[0];
            for _ in 0..50 {
                x -= (x - a * (x + sh).sin() - y[0]) / (1.0 - a * (x + sh).cos());
            }
            (1.0 + 0.5 * x) / (1.0 - a * (x + sh).cos())
        };
        let r = optimal_map_residual(&psi, &rho0, rho1, p).unwrap();
        (2..nx - 2).map(|i| r.values[i].abs()).fold(0.0, f64::max)
    };
    let (e1, e2) = (err(40), err(80));
    println!("monge-ampere {e1:e} {e2:e}");
    assert!(e2 < e1 / 3.5);
    assert!(e2 < 1e-3);
}

#[test]
fn critical_index_spot_values_are_exact() {
    assert_eq!(beta_critical(2.0, 1.0, 1).unwrap(), 0.5);
    assert_eq!(beta_critical(3.0, 1.0, 1).unwrap(), 0.25);
    assert_eq!(beta_critical(2.0, 1.0, 2).unwrap(), 0.5);
}

mod rescaling {
    use pflow::exactsol::rescale;
    use pflow::presets::{random_seeded, taylor_green, Initial};
    use pflow::steppers::{FlowState, Model, StepConfig, Stepper};
    use pflow::{Grid2D, VectorField2};

    fn advance(st: &mut Stepper, mut s: FlowState, t_end: f64, cfl_scale: f64) -> FlowState {
        while s.t < t_end * (1.0 - 1e-12) {
            let dt = (cfl_scale * st.stable_dt(&s)).min(t_end - s.t);
            s = st.step(&s, dt).unwrap();
        }
        s
    }

    fn stepper(g: Grid2D, p: f64, nu: f64) -> Stepper {
        Stepper::new(
            g,
            StepConfig::new(p, Model::MomentumGammaP)
                .unwrap()
                .with_nu(nu),
        )
        .unwrap()
    }

    /// Returns (rescale mismatch, single-run discretisation error estimate).
    fn mismatch(p: f64, v0: VectorField2) -> (f64, f64) {
        let (nu, lambda, t1, t2) = (0.05, 2.0, 0.2, 0.4);
        let g = v0.grid;
        let mut st = stepper(g, p, nu);
        let s0 = st.initial_state(&Initial::Velocity(v0.clone())).unwrap();
        let a1 = advance(&mut st, s0.clone(), t1, 1.0);
        let a2 = advance(&mut st, a1.clone(), t2, 1.0);
        let mut fine = stepper(g, p, nu);
        let f2 = advance(&mut fine, s0, t2, 0.5);
        let disc = a2.v.sub(&f2.v).l2_norm() / a2.v.l2_norm();

        let (w1, tau1) = rescale(&a1.v, t1, lambda, p, p).unwrap();
        let (w2, tau2) = rescale(&a2.v, t2, lambda, p, p).unwrap();
        let mut sr = stepper(w1.grid, p, nu);
        let b1 = sr.state_from_velocity(&w1, tau1).unwrap();
        let b2 = advance(&mut sr, b1, tau2, 1.0);
        (b2.v.sub(&w2).l2_norm() / w2.l2_norm(), disc)
    }

    #[test]
    fn quadratic_taylor_green_rescales() {
        let g = Grid2D::periodic_2pi(32).unwrap();
        let (m, disc) = mismatch(2.0, taylor_green(g));
        assert!(m <= 2.0 * disc + 1e-12, "{m} vs {disc}");
    }

    #[test]
    fn cubic_run_rescales() {
        let g = Grid2D::periodic_2pi(32).unwrap();
        let (m, disc) = mismatch(3.0, random_seeded(g, 4));
        assert!(m <= 2.0 * disc + 1e-12, "{m} vs {disc}");
    }
}
