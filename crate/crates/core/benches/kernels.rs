//! Hot kernels on the rayon pool against the sequential path.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pflow::fields::perp_grad;
use pflow::par;
use pflow::plaplacian::{apply_p_laplacian, PLaplaceSolver, PlapConfig};
use pflow::presets::gaussian_vortex;
use pflow::steppers::{Model, StepConfig, Stepper};
use pflow::transport::semi_lagrangian;
use pflow::{Grid2D, PExponent, ScalarField};

fn psi_field(nx: usize) -> ScalarField {
    let g = Grid2D::periodic_2pi(nx).unwrap();
    ScalarField::from_fn(g, |x, y| x.sin() * (2.0 * y).cos() + 0.3 * (x + y).cos())
}

fn both<F>(c: &mut Criterion, name: &str, sizes: &[usize], mut make: impl FnMut(usize) -> F)
where
    F: FnMut() + Send,
{
    let mut group = c.benchmark_group(name);
    group.sample_size(10);
    for &nx in sizes {
        let mut f = make(nx);
        group.bench_with_input(BenchmarkId::new("parallel", nx), &nx, |b, _| b.iter(&mut f));
        let mut f = make(nx);
        group.bench_with_input(BenchmarkId::new("sequential", nx), &nx, |b, _| {
            b.iter_custom(|n| {
                par::sequential(|| {
                    let start = std::time::Instant::now();
                    for _ in 0..n {
                        f();
                    }
                    start.elapsed()
                })
            })
        });
    }
    group.finish();
}

fn p_laplacian(c: &mut Criterion) {
    both(c, "apply_p_laplacian", &[128, 256, 512], |nx| {
        let psi = psi_field(nx);
        let p = PExponent::new(3.0).unwrap();
        let cfg = PlapConfig::default();
        move || {
            std::hint::black_box(apply_p_laplacian(&psi, p, &cfg));
        }
    });
}

fn advection(c: &mut Criterion) {
    both(c, "semi_lagrangian", &[128, 256, 512], |nx| {
        let psi = psi_field(nx);
        let v = perp_grad(&psi);
        let dt = 0.5 * psi.grid.hx() / v.max_magnitude();
        move || {
            std::hint::black_box(semi_lagrangian(&psi, &v, dt, 2));
        }
    });
}

fn solve(c: &mut Criterion) {
    both(c, "p_laplace_solve", &[64, 128], |nx| {
        let omega = gaussian_vortex(Grid2D::periodic_2pi(nx).unwrap());
        let mut solver = PLaplaceSolver::new(
            omega.grid,
            PExponent::new(3.0).unwrap(),
            PlapConfig::default(),
        )
        .unwrap();
        move || {
            std::hint::black_box(solver.solve(&omega, None).unwrap());
        }
    });
}

fn step(c: &mut Criterion) {
    both(c, "pns_momentum_step", &[64, 128], |nx| {
        let g = Grid2D::periodic_2pi(nx).unwrap();
        let cfg = StepConfig::new(3.0, Model::MomentumGammaP)
            .unwrap()
            .with_nu(0.01);
        let mut st = Stepper::new(g, cfg).unwrap();
        let s = st.state_from_vorticity(&gaussian_vortex(g), 0.0).unwrap();
        let dt = st.stable_dt(&s);
        move || {
            std::hint::black_box(st.step(&s, dt).unwrap());
        }
    });
}

criterion_group!(kernels, p_laplacian, advection, solve, step);
criterion_main!(kernels);
