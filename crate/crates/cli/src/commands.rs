//! Single-experiment subcommands that do not need a config file.

use std::fs;
use std::path::Path;

use pflow::diagnostics::{energy_budget, BudgetReport, DiagnosticsRecord, CSV_HEADER};
use pflow::exactsol::{
    cloud_hamiltonian, evolve_doubly_degenerate, geodesic_transport, wasserstein_p_cost,
    BarenblattParams,
};
use pflow::interp::sample;
use pflow::plaplacian::{PLaplaceSolver, PlapConfig, SolveStats};
use pflow::{PExponent, ScalarField};

use crate::config::ModelKind;
use crate::error::CliError;
use crate::run::{
    barenblatt_l1, diffusion_grid, diffusion_mass, gaussian_density, geodesic_cloud, snapshot_name,
};
use crate::snapshot::{read_snapshot, write_snapshot, Snapshot};

/// Read a flow `diag.csv` back into records.
pub fn read_diagnostics(path: &Path) -> Result<Vec<DiagnosticsRecord>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        Some((_, h)) => {
            return Err(CliError::Parse {
                line: 1,
                message: format!("unexpected header `{h}`, expected `{CSV_HEADER}`"),
            })
        }
        None => {
            return Err(CliError::Parse {
                line: 1,
                message: "empty file".into(),
            })
        }
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            DiagnosticsRecord::from_csv_row(l).map_err(|e| CliError::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Re-run the energy budget of a stored series. Fails with a numerical
/// error when `max_violation` is given and exceeded.
pub fn check_budget(
    path: &Path,
    model: ModelKind,
    max_violation: Option<f64>,
) -> Result<BudgetReport, CliError> {
    let flow = model.flow_model().ok_or_else(|| CliError::Validation {
        key: "model".into(),
        constraint: format!(
            "{model} has no energy budget; use euler, euler-damped, pns-gamma2 or pns-momentum"
        ),
    })?;
    let series = read_diagnostics(path)?;
    let report = energy_budget(&series, flow)?;
    if let Some(limit) = max_violation {
        if !(report.max_violation <= limit) {
            return Err(CliError::CheckFailed(format!(
                "budget violation {:e} exceeds {limit:e}",
                report.max_violation
            )));
        }
    }
    Ok(report)
}

/// Solve `-Δ_p ψ = ω` for the single-component field in `input`.
pub fn poisson_file(
    p: f64,
    input: &Path,
    out: &Path,
    cfg: PlapConfig,
) -> Result<SolveStats, CliError> {
    let omega = read_snapshot(input)?.to_scalar()?;
    let mut solver = PLaplaceSolver::new(omega.grid, PExponent::new(p)?, cfg)?;
    let (psi, stats) = solver.solve(&omega, None)?;
    write_snapshot(&Snapshot::from_scalar(&psi), out)?;
    Ok(stats)
}

#[derive(Debug, Clone, Copy)]
pub struct DiffusionParams {
    pub p: f64,
    pub m: f64,
    pub d: u32,
    pub nx: usize,
    pub length: f64,
    pub sigma: f64,
    pub cfl: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionRecord {
    pub t: f64,
    pub steps: usize,
    pub mass_drift: f64,
    /// Relative L¹ distance from the Barenblatt density.
    pub profile_l1: f64,
    /// Relative L¹ distance of the rescaled profile from the previous
    /// time's, `NaN` for the first time.
    pub collapse_l1: f64,
}

/// `t^{dβ} ρ(c + ξ t^β)` compared between two times on the `ξ` points of
/// the later grid.
pub fn collapse_l1(a: &ScalarField, ta: f64, b: &ScalarField, tb: f64, beta: f64, d: u32) -> f64 {
    let g = b.grid;
    let [cx, cy] = g.center();
    let (sa, sb) = (ta.powf(beta), tb.powf(beta));
    let (ampa, ampb) = (sa.powi(d as i32), sb.powi(d as i32));
    let (mut diff, mut norm) = (0.0, 0.0);
    for k in 0..g.len() {
        let [x, y] = g.point(k);
        let (xi, eta) = ((x - cx) / sb, (y - cy) / sb);
        let pa = if d == 1 {
            [cx + xi * sa, y]
        } else {
            [cx + xi * sa, cy + eta * sa]
        };
        let inside = pa[0] >= 0.0 && pa[0] <= g.lx && pa[1] >= 0.0 && pa[1] <= g.ly;
        let ua = if inside {
            ampa * sample(&a.values, &a.grid, pa)
        } else {
            0.0
        };
        let ub = ampb * b.values[k];
        diff += (ua - ub).abs();
        norm += ub.abs();
    }
    diff / norm
}

/// Evolve a narrow unit-mass Gaussian through `times`, comparing with the
/// Barenblatt solution and with the previous rescaled profile at each one.
pub fn diffusion_experiment(
    prm: DiffusionParams,
    times: &[f64],
    out: Option<&Path>,
) -> Result<Vec<DiffusionRecord>, CliError> {
    let bp = BarenblattParams::new(prm.p, prm.m, prm.d)?;
    let grid = diffusion_grid(prm.nx, prm.nx, prm.length, prm.length, prm.d)?;
    let plap = PlapConfig::default();
    let mut rho = gaussian_density(grid, prm.sigma, prm.d);
    let mass0 = diffusion_mass(&rho, prm.d);
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut t = 0.0;
    let mut prev: Option<(ScalarField, f64)> = None;
    let mut records = Vec::new();
    for (i, &target) in times.iter().enumerate() {
        if !(target > t) {
            return Err(CliError::Validation {
                key: "times".into(),
                constraint: "must be positive and strictly increasing".into(),
            });
        }
        let (next, steps) =
            evolve_doubly_degenerate(&rho, prm.p, prm.m, t, target, prm.cfl, &plap)?;
        rho = next;
        t = target;
        let collapse = match &prev {
            Some((r, tp)) => collapse_l1(r, *tp, &rho, t, bp.beta_c, prm.d),
            None => f64::NAN,
        };
        records.push(DiffusionRecord {
            t,
            steps,
            mass_drift: (diffusion_mass(&rho, prm.d) - mass0).abs() / mass0,
            profile_l1: barenblatt_l1(&rho, &bp, t),
            collapse_l1: collapse,
        });
        if let Some(dir) = out {
            write_snapshot(&Snapshot::from_scalar(&rho), &dir.join(snapshot_name(i)))?;
        }
        prev = Some((rho.clone(), t));
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicReport {
    pub cost_start: f64,
    pub cost_end: f64,
    pub hamiltonian: f64,
    /// `|cost - |a|^p| / |a|^p` for a pure translation, else `NaN`.
    pub translation_error: f64,
}

pub fn geodesic_experiment(
    p: f64,
    n: usize,
    vx: f64,
    vy: f64,
    shear: f64,
    t: f64,
) -> Result<GeodesicReport, CliError> {
    let pc = geodesic_cloud(n, vx, vy, shear)?;
    let moved = geodesic_transport(&pc, t)?;
    let cost_start = wasserstein_p_cost(&pc, p)?;
    let cost_end = wasserstein_p_cost(&moved, p)?;
    let translation_error = if shear == 0.0 {
        let exact = vx.hypot(vy).powf(p);
        (cost_end - exact).abs() / exact.max(f64::MIN_POSITIVE)
    } else {
        f64::NAN
    };
    Ok(GeodesicReport {
        cost_start,
        cost_end,
        hamiltonian: cloud_hamiltonian(&moved, p)?,
        translation_error,
    })
}
