//! The `run` driver: one model family per config, artifacts in `out_dir`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use pflow::diagnostics::{conserved_quantities, CSV_HEADER};
use pflow::exactsol::evolve_doubly_degenerate;
use pflow::exactsol::{
    cloud_hamiltonian, geodesic_transport, wasserstein_p_cost, BarenblattParams, ParticleCloud,
};
use pflow::fields::{curl2, integrate};
use pflow::plaplacian::PLaplaceSolver;
use pflow::pmomentum::p_power;
use pflow::presets::{gaussian_vortex, radial_steady, random_seeded, taylor_green, Initial};
use pflow::steppers::Stepper;
use pflow::transport::{advance_tracers_between, TracerSet};
use pflow::{Grid2D, PExponent, ScalarField};
use serde_json::{json, Map, Value};

use crate::config::{parse_config, InitialSpec, ModelKind, SimConfig};
use crate::error::CliError;
use crate::snapshot::{read_snapshot, write_snapshot, Snapshot, SnapshotError};

pub const DIAG_FILE: &str = "diag.csv";
pub const RUN_FILE: &str = "run.json";
pub const FAILED_FILE: &str = "FAILED";

/// Points on the tracked circulation curve.
const CURVE_POINTS: usize = 256;

pub fn snapshot_name(index: usize) -> String {
    format!("snap_{index}.pfld")
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub records: usize,
    pub snapshots: usize,
    pub steps: usize,
    pub t_final: f64,
    pub wall_clock: f64,
    /// Family-specific results, also stored under `results` in `run.json`.
    pub results: Map<String, Value>,
}

/// Diagnostics rows and snapshots of one run.
struct Sink {
    dir: PathBuf,
    csv: BufWriter<File>,
    records: usize,
    snapshots: usize,
}

impl Sink {
    fn create(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(DIAG_FILE);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            csv: BufWriter::new(file),
            records: 0,
            snapshots: 0,
        })
    }

    fn line(&mut self, text: &str) -> Result<(), CliError> {
        writeln!(self.csv, "{text}").map_err(|e| CliError::io(self.dir.join(DIAG_FILE), e))
    }

    fn row(&mut self, text: &str) -> Result<(), CliError> {
        self.line(text)?;
        self.records += 1;
        Ok(())
    }

    fn snapshot(&mut self, s: &Snapshot) -> Result<(), CliError> {
        write_snapshot(s, &self.dir.join(snapshot_name(self.snapshots)))?;
        self.snapshots += 1;
        Ok(())
    }

    fn flush(&mut self) -> Result<(), CliError> {
        self.csv
            .flush()
            .map_err(|e| CliError::io(self.dir.join(DIAG_FILE), e))
    }
}

#[derive(Default)]
struct Outcome {
    steps: usize,
    t_final: f64,
    results: Map<String, Value>,
}

/// Number of records after the initial one.
fn record_count(cfg: &SimConfig) -> usize {
    ((cfg.t_end / cfg.output_every) - 1e-9).ceil().max(1.0) as usize
}

fn record_time(cfg: &SimConfig, k: usize, count: usize) -> f64 {
    if k == count {
        cfg.t_end
    } else {
        (k as f64 * cfg.output_every).min(cfg.t_end)
    }
}

/// Run the configured model, writing `diag.csv`, `snap_<i>.pfld` and
/// `run.json` to `out_dir`. On failure the partial outputs are kept and a
/// `FAILED` marker holds the error message.
pub fn run(cfg: &SimConfig) -> Result<RunSummary, CliError> {
    cfg.validate()?;
    let dir = PathBuf::from(&cfg.out_dir);
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let marker = dir.join(FAILED_FILE);
    match fs::remove_file(&marker) {
        Ok(()) => {}
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
        Err(e) => return Err(CliError::io(&marker, e)),
    }
    let start = Instant::now();
    let mut sink = Sink::create(&dir)?;
    let outcome = match cfg.model {
        ModelKind::Diffusion => run_diffusion(cfg, &mut sink),
        ModelKind::Geodesic => run_geodesic(cfg, &mut sink),
        ModelKind::Poisson => run_poisson(cfg, &mut sink),
        _ => run_flow(cfg, &mut sink),
    };
    let flushed = sink.flush();
    let outcome = outcome.and_then(|o| flushed.map(|()| o));
    let wall_clock = start.elapsed().as_secs_f64();
    let (status, error, o) = match &outcome {
        Ok(o) => ("ok", Value::Null, o),
        Err(e) => ("failed", Value::String(e.to_string()), &Outcome::default()),
    };
    let record = json!({
        "status": status,
        "error": error,
        "config": cfg.to_config_text(),
        "resolved": cfg,
        "versions": { "pflow": pflow::VERSION, "pflow-cli": env!("CARGO_PKG_VERSION") },
        "threads": rayon::current_num_threads(),
        "wall_clock_seconds": wall_clock,
        "records": sink.records,
        "snapshots": sink.snapshots,
        "steps": o.steps,
        "t_final": o.t_final,
        "results": o.results,
    });
    let run_path = dir.join(RUN_FILE);
    let text = serde_json::to_string_pretty(&record).expect("run record serialises");
    let written = fs::write(&run_path, text + "\n").map_err(|e| CliError::io(&run_path, e));
    match outcome {
        Ok(o) => {
            written?;
            Ok(RunSummary {
                out_dir: dir,
                records: sink.records,
                snapshots: sink.snapshots,
                steps: o.steps,
                t_final: o.t_final,
                wall_clock,
                results: o.results,
            })
        }
        Err(e) => {
            fs::write(&marker, format!("{e}\n")).map_err(|io| CliError::io(&marker, io))?;
            Err(e)
        }
    }
}

/// The config echoed in a `run.json`.
pub fn config_from_run_json(path: &Path) -> Result<SimConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        line: e.line(),
        message: format!("run.json: {e}"),
    })?;
    let echo = v
        .get("config")
        .and_then(Value::as_str)
        .ok_or_else(|| CliError::Parse {
            line: 1,
            message: "run.json has no `config` string".into(),
        })?;
    parse_config(echo)
}

fn load_on_grid(path: &str, grid: &Grid2D) -> Result<Snapshot, CliError> {
    let s = read_snapshot(Path::new(path))?;
    if s.grid != *grid {
        return Err(SnapshotError::ShapeMismatch(format!(
            "{path} holds a {}x{} grid of extent {}x{} ({:?}); the config asks for {}x{} of extent {}x{} ({:?})",
            s.grid.nx, s.grid.ny, s.grid.lx, s.grid.ly, s.grid.bc, grid.nx, grid.ny, grid.lx, grid.ly, grid.bc
        ))
        .into());
    }
    Ok(s)
}

/// Initial data named by the config on `grid`.
pub fn initial_data(cfg: &SimConfig, grid: Grid2D) -> Result<Initial, CliError> {
    Ok(match &cfg.initial {
        InitialSpec::GaussianVortex => Initial::Vorticity(gaussian_vortex(grid)),
        InitialSpec::RadialSteady => Initial::Vorticity(radial_steady(grid)),
        InitialSpec::TaylorGreen => Initial::Velocity(taylor_green(grid)),
        InitialSpec::RandomSeeded(seed) => Initial::Velocity(random_seeded(grid, *seed)),
        InitialSpec::FromFile(path) => {
            let s = load_on_grid(path, &grid)?;
            match s.ncomp() {
                1 => Initial::Vorticity(s.to_scalar()?),
                2 => Initial::Velocity(s.to_vector()?),
                n => {
                    return Err(SnapshotError::ShapeMismatch(format!(
                        "{path}: {n} components, expected 1 or 2"
                    ))
                    .into())
                }
            }
        }
    })
}

fn periodic_grid(cfg: &SimConfig) -> Result<Grid2D, CliError> {
    Ok(Grid2D::periodic(
        cfg.grid.nx,
        cfg.grid.ny,
        cfg.grid.lx,
        cfg.grid.ly,
    )?)
}

fn run_flow(cfg: &SimConfig, sink: &mut Sink) -> Result<Outcome, CliError> {
    let step_cfg = cfg.step_config().ok_or_else(|| CliError::Validation {
        key: "model".into(),
        constraint: format!("{} is not a flow model", cfg.model),
    })?;
    let grid = periodic_grid(cfg)?;
    let mut st = Stepper::new(grid, step_cfg)?;
    let mut s = st.initial_state(&initial_data(cfg, grid)?)?;
    let mut curve = if cfg.track_curve {
        Some(TracerSet::circle(
            grid.center(),
            0.2 * grid.lx.min(grid.ly),
            CURVE_POINTS,
        )?)
    } else {
        None
    };
    sink.line(CSV_HEADER)?;
    let emit = |sink: &mut Sink, s: &pflow::steppers::FlowState, curve: Option<&TracerSet>| {
        let rec = conserved_quantities(s, curve, &step_cfg)?;
        sink.row(&rec.to_csv_row())?;
        sink.snapshot(&Snapshot::from_vector(&s.v))
    };
    emit(sink, &s, curve.as_ref())?;
    let count = record_count(cfg);
    let mut steps = 0;
    for k in 1..=count {
        let target = record_time(cfg, k, count);
        while s.t < target {
            let remaining = target - s.t;
            let dt = st.stable_dt(&s).min(remaining);
            if !(dt > 0.0) {
                return Err(pflow::Error::InvalidParameter(format!(
                    "stable step collapsed to {dt:e} at t = {}",
                    s.t
                ))
                .into());
            }
            let mut next = st.step(&s, dt)?;
            if dt == remaining {
                next.t = target;
            }
            if let Some(c) = &curve {
                curve = Some(advance_tracers_between(c, &s.v, &next.v, dt));
            }
            s = next;
            steps += 1;
        }
        emit(sink, &s, curve.as_ref())?;
    }
    let mut results = Map::new();
    results.insert("newton_iterations".into(), json!(st.newton_iterations));
    results.insert("cg_iterations".into(), json!(st.cg_iterations));
    Ok(Outcome {
        steps,
        t_final: s.t,
        results,
    })
}

fn run_poisson(cfg: &SimConfig, sink: &mut Sink) -> Result<Outcome, CliError> {
    let grid = periodic_grid(cfg)?;
    let p = PExponent::new(cfg.p)?;
    let omega = match initial_data(cfg, grid)? {
        Initial::Vorticity(w) => w,
        Initial::Velocity(v) => curl2(&p_power(&v, p)),
    };
    let mut solver = PLaplaceSolver::new(grid, p, cfg.plap_config())?;
    let (psi, stats) = solver.solve(&omega, None)?;
    let energy = stats.energies.last().copied().unwrap_or(f64::NAN);
    sink.line("residual,tolerance,iterations,cg_iterations,energy")?;
    sink.row(&format!(
        "{:.16e},{:.16e},{},{},{:.16e}",
        stats.residual, stats.tolerance, stats.iterations, stats.cg_iterations, energy
    ))?;
    sink.snapshot(&Snapshot::from_scalar(&psi))?;
    let mut results = Map::new();
    results.insert("residual".into(), json!(stats.residual));
    results.insert("tolerance".into(), json!(stats.tolerance));
    results.insert("iterations".into(), json!(stats.iterations));
    results.insert("cg_iterations".into(), json!(stats.cg_iterations));
    Ok(Outcome {
        steps: stats.iterations,
        t_final: 0.0,
        results,
    })
}

/// Grid of the diffusion family: a 4-row strip for `d = 1`.
pub fn diffusion_grid(nx: usize, ny: usize, lx: f64, ly: f64, d: u32) -> Result<Grid2D, CliError> {
    Ok(if d == 1 {
        Grid2D::dirichlet(nx, 4, lx, 4.0 * lx / nx as f64)?
    } else {
        Grid2D::dirichlet(nx, ny, lx, ly)?
    })
}

/// Unit-mass Gaussian of width `sigma` about the grid centre (per unit
/// length in y when `d = 1`).
pub fn gaussian_density(grid: Grid2D, sigma: f64, d: u32) -> ScalarField {
    let [cx, cy] = grid.center();
    let s2 = sigma * sigma;
    if d == 1 {
        let norm = 1.0 / (sigma * std::f64::consts::TAU.sqrt());
        ScalarField::from_fn(grid, move |x, _| {
            norm * (-0.5 * (x - cx).powi(2) / s2).exp()
        })
    } else {
        let norm = 1.0 / (std::f64::consts::TAU * s2);
        ScalarField::from_fn(grid, move |x, y| {
            norm * (-0.5 * ((x - cx).powi(2) + (y - cy).powi(2)) / s2).exp()
        })
    }
}

/// Mass per unit length in y for `d = 1`, total mass for `d = 2`.
pub fn diffusion_mass(rho: &ScalarField, d: u32) -> f64 {
    let m = integrate(rho);
    if d == 1 {
        m / rho.grid.ly
    } else {
        m
    }
}

/// Relative L¹ distance of `ρ` from the Barenblatt density at time `t`.
pub fn barenblatt_l1(rho: &ScalarField, bp: &BarenblattParams, t: f64) -> f64 {
    let g = rho.grid;
    let [cx, cy] = g.center();
    let (mut diff, mut norm) = (0.0, 0.0);
    for k in 0..g.len() {
        let [x, y] = g.point(k);
        let r = if bp.d == 1 {
            (x - cx).abs()
        } else {
            (x - cx).hypot(y - cy)
        };
        let exact = bp.density(r, t);
        diff += (rho.values[k] - exact).abs();
        norm += exact.abs();
    }
    diff / norm
}

fn run_diffusion(cfg: &SimConfig, sink: &mut Sink) -> Result<Outcome, CliError> {
    let spec = cfg.diffusion;
    let bp = BarenblattParams::new(cfg.p, spec.m, spec.d)?;
    let grid = diffusion_grid(cfg.grid.nx, cfg.grid.ny, cfg.grid.lx, cfg.grid.ly, spec.d)?;
    let mut rho = match &cfg.initial {
        InitialSpec::FromFile(path) => load_on_grid(path, &grid)?.to_scalar()?,
        _ => gaussian_density(grid, spec.sigma, spec.d),
    };
    let plap = cfg.plap_config();
    sink.line("t,mass,max_density,barenblatt_l1")?;
    let emit = |sink: &mut Sink, rho: &ScalarField, t: f64| {
        let l1 = if t > 0.0 {
            barenblatt_l1(rho, &bp, t)
        } else {
            f64::NAN
        };
        let max = rho.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        sink.row(&format!(
            "{t:.16e},{:.16e},{max:.16e},{l1:.16e}",
            diffusion_mass(rho, spec.d)
        ))?;
        sink.snapshot(&Snapshot::from_scalar(rho))
    };
    emit(sink, &rho, 0.0)?;
    let mass0 = diffusion_mass(&rho, spec.d);
    let count = record_count(cfg);
    let (mut t, mut steps) = (0.0, 0);
    for k in 1..=count {
        let target = record_time(cfg, k, count);
        let (next, n) = evolve_doubly_degenerate(&rho, cfg.p, spec.m, t, target, cfg.cfl, &plap)?;
        rho = next;
        t = target;
        steps += n;
        emit(sink, &rho, t)?;
    }
    let mut results = Map::new();
    results.insert("beta".into(), json!(bp.beta_c));
    results.insert(
        "mass_drift".into(),
        json!((diffusion_mass(&rho, spec.d) - mass0).abs() / mass0),
    );
    results.insert("barenblatt_l1".into(), json!(barenblatt_l1(&rho, &bp, t)));
    Ok(Outcome {
        steps,
        t_final: t,
        results,
    })
}

/// Particles on the unit square moving with `(vx + shear·(y - 1/2), vy)`.
pub fn geodesic_cloud(n: usize, vx: f64, vy: f64, shear: f64) -> Result<ParticleCloud, CliError> {
    Ok(ParticleCloud::uniform_square(n, move |x| {
        [vx + shear * (x[1] - 0.5), vy]
    })?)
}

fn run_geodesic(cfg: &SimConfig, sink: &mut Sink) -> Result<Outcome, CliError> {
    let g = cfg.geodesic;
    let pc = geodesic_cloud(g.n, g.vx, g.vy, g.shear)?;
    sink.line("t,cost,hamiltonian,mean_x,mean_y")?;
    let emit = |sink: &mut Sink, t: f64| -> Result<f64, CliError> {
        let moved = geodesic_transport(&pc, t)?;
        let cost = wasserstein_p_cost(&moved, cfg.p)?;
        let ham = cloud_hamiltonian(&moved, cfg.p)?;
        let total: f64 = moved.weights.iter().sum();
        let mean = |c: usize| {
            moved
                .positions
                .iter()
                .zip(&moved.weights)
                .map(|(x, w)| w * x[c])
                .sum::<f64>()
                / total
        };
        sink.row(&format!(
            "{t:.16e},{cost:.16e},{ham:.16e},{:.16e},{:.16e}",
            mean(0),
            mean(1)
        ))?;
        Ok(cost)
    };
    let cost0 = emit(sink, 0.0)?;
    let count = record_count(cfg);
    let mut cost = cost0;
    for k in 1..=count {
        cost = emit(sink, record_time(cfg, k, count))?;
    }
    let mut results = Map::new();
    results.insert("cost".into(), json!(cost));
    results.insert(
        "cost_drift".into(),
        json!((cost - cost0).abs() / cost0.abs().max(f64::MIN_POSITIVE)),
    );
    Ok(Outcome {
        steps: count,
        t_final: cfg.t_end,
        results,
    })
}
