use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pflow::plaplacian::PlapConfig;
use pflow_cli::commands::{
    check_budget, diffusion_experiment, geodesic_experiment, poisson_file, DiffusionParams,
};
use pflow_cli::{init_thread_pool, parse_config, run, CliError, ModelKind, KEYS_HELP};

#[derive(Parser)]
#[command(
    name = "pflow",
    version,
    about = "p-Euler and p-Navier-Stokes laboratory"
)]
#[command(
    after_help = "Environment: PFLOW_THREADS caps the number of worker threads.\n\
Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 I/O error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config file; writes diag.csv, snap_<i>.pfld and run.json.
    #[command(after_help = KEYS_HELP)]
    Run {
        /// Path of the `key = value` config.
        config: PathBuf,
    },
    /// Solve -Δ_p ψ = ω for a single-component PFLD field.
    Poisson {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Relative residual tolerance.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Gradient regularisation δ.
        #[arg(long, default_value_t = 1e-8)]
        delta: f64,
    },
    /// Doubly degenerate diffusion from a narrow Gaussian, compared with
    /// the Barenblatt solution.
    Diffusion {
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        #[arg(long, default_value_t = 1)]
        d: u32,
        #[arg(long, default_value_t = 600)]
        nx: usize,
        /// Domain length (both sides when d = 2).
        #[arg(long, default_value_t = 12.0)]
        length: f64,
        /// Width of the initial Gaussian.
        #[arg(long, default_value_t = 0.05)]
        sigma: f64,
        #[arg(long, default_value_t = 0.9)]
        cfl: f64,
        /// Comma-separated output times.
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        times: Vec<f64>,
        /// Directory for density snapshots.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Particle geodesics on the unit square with a sheared translation.
    Geodesic {
        #[arg(long)]
        p: f64,
        /// Particles per side.
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        vx: f64,
        #[arg(long, default_value_t = 0.0)]
        vy: f64,
        #[arg(long, default_value_t = 0.0)]
        shear: f64,
        /// Geodesic time in [0, 1].
        #[arg(long, default_value_t = 1.0)]
        t: f64,
    },
    /// Recompute the energy budget of a stored diag.csv.
    Check {
        diag: PathBuf,
        /// euler, euler-damped, pns-gamma2 or pns-momentum.
        #[arg(long)]
        model: String,
        /// Fail with exit code 3 above this relative violation.
        #[arg(long)]
        max_violation: Option<f64>,
    },
}

fn bad(key: &str, constraint: String) -> CliError {
    CliError::Validation {
        key: key.into(),
        constraint,
    }
}

fn execute(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run { config } => {
            let text = std::fs::read_to_string(&config).map_err(|e| CliError::io(&config, e))?;
            let cfg = parse_config(&text)?;
            let s = run(&cfg)?;
            println!(
                "{}: {} records, {} snapshots, {} steps to t = {} in {:.2}s",
                s.out_dir.display(),
                s.records,
                s.snapshots,
                s.steps,
                s.t_final,
                s.wall_clock
            );
            for (k, v) in &s.results {
                println!("  {k} = {v}");
            }
        }
        Command::Poisson {
            p,
            input,
            out,
            tol,
            delta,
        } => {
            let cfg = PlapConfig {
                tol,
                delta,
                ..PlapConfig::default()
            };
            cfg.validate().map_err(|e| bad("tol", e.to_string()))?;
            let stats = poisson_file(p, &input, &out, cfg)?;
            println!(
                "residual {:e} tolerance {:e} iterations {} cg {}",
                stats.residual, stats.tolerance, stats.iterations, stats.cg_iterations
            );
        }
        Command::Diffusion {
            p,
            m,
            d,
            nx,
            length,
            sigma,
            cfl,
            times,
            out,
        } => {
            if !(d == 1 || d == 2) {
                return Err(bad("d", format!("must be 1 or 2, got {d}")));
            }
            let prm = DiffusionParams {
                p,
                m,
                d,
                nx,
                length,
                sigma,
                cfl,
            };
            println!("t,steps,mass_drift,profile_l1,collapse_l1");
            for r in diffusion_experiment(prm, &times, out.as_deref())? {
                println!(
                    "{},{},{:e},{:e},{:e}",
                    r.t, r.steps, r.mass_drift, r.profile_l1, r.collapse_l1
                );
            }
        }
        Command::Geodesic {
            p,
            n,
            vx,
            vy,
            shear,
            t,
        } => {
            let r = geodesic_experiment(p, n, vx, vy, shear, t)?;
            println!(
                "cost {:e} -> {:e} hamiltonian {:e} translation error {:e}",
                r.cost_start, r.cost_end, r.hamiltonian, r.translation_error
            );
        }
        Command::Check {
            diag,
            model,
            max_violation,
        } => {
            let model: ModelKind = model.parse().map_err(|e| bad("model", e))?;
            let report = check_budget(&diag, model, max_violation)?;
            println!("t,dh_dt,predicted,violation");
            for e in &report.entries {
                println!(
                    "{:e},{:e},{:e},{:e}",
                    e.t, e.dh_dt, e.predicted, e.violation
                );
            }
            println!("max violation {:e}", report.max_violation);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_thread_pool().and_then(|_| execute(cli.command));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pflow: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
