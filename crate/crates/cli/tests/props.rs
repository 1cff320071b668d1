use pflow::{Boundary, Grid2D};
use pflow_cli::snapshot::{decode, encode};
use pflow_cli::{parse_config, InitialSpec, ModelKind, Snapshot};
use proptest::prelude::*;

fn model() -> impl Strategy<Value = ModelKind> {
    prop::sample::select(ModelKind::ALL.to_vec())
}

fn initial() -> impl Strategy<Value = InitialSpec> {
    prop_oneof![
        Just(InitialSpec::GaussianVortex),
        Just(InitialSpec::RadialSteady),
        Just(InitialSpec::TaylorGreen),
        any::<u64>().prop_map(InitialSpec::RandomSeeded),
        "[a-z0-9_/.]{1,12}".prop_map(InitialSpec::FromFile),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn config_echo_round_trips(
        model in model(),
        p in 1.2f64..4.0,
        nu in 0.0f64..1.0,
        eps in 0.0f64..0.1,
        nx in 8usize..300,
        lx in 0.1f64..100.0,
        t_end in 1e-3f64..1.0,
        every in 1e-3f64..1.0,
        cfl in 0.01f64..0.9,
        init in initial(),
    ) {
        let gamma = match model {
            ModelKind::PnsGamma2 => String::new(),
            _ => format!("gamma = {p:?}\n"),
        };
        let text = format!(
            "model = {model}\np = {p:?}\n{gamma}nu = {nu:?}\neps_mollifier = {eps:?}\ngrid.nx = {nx}\n\
             grid.Lx = {lx:?}\nt_end = {t_end:?}\noutput_every = {every:?}\ncfl = {cfl:?}\ninitial = {init}\n"
        );
        let cfg = parse_config(&text).unwrap();
        prop_assert_eq!(parse_config(&cfg.to_config_text()).unwrap(), cfg);
    }

    #[test]
    fn snapshot_round_trip_is_bit_exact(
        nx in 4usize..20,
        ny in 4usize..20,
        ncomp in 1usize..4,
        periodic in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let bc = if periodic { Boundary::Periodic } else { Boundary::Dirichlet };
        let grid = Grid2D::new(nx, ny, 1.0 + nx as f64 / 7.0, 0.3, bc).unwrap();
        let comps: Vec<Vec<f64>> = (0..ncomp)
            .map(|c| (0..nx * ny).map(|k| f64::from_bits(seed.wrapping_mul(k as u64 + 1).rotate_left(c as u32) & !(0x7ff << 52) | (0x3ff << 52))).collect())
            .collect();
        let s = Snapshot::new(grid, comps).unwrap();
        let bytes = encode(&s);
        prop_assert_eq!(bytes.len(), 32 + 8 * ncomp * nx * ny);
        let back = decode(&bytes).unwrap();
        prop_assert_eq!(back.grid, s.grid);
        let same = back.components.iter().flatten().zip(s.components.iter().flatten()).all(|(a, b)| a.to_bits() == b.to_bits());
        prop_assert!(same);
    }
}
