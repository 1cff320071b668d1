//! Conserved and dissipated quantities of a running simulation and the
//! energy budgets that close them.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fields::{curl2, div, grad, lp_norm_pow, VectorField2};
use crate::par;
use crate::plaplacian::gamma_dissipation;
use crate::pmomentum::{p_power, PExponent};
use crate::steppers::{FlowState, Model, StepConfig};
use crate::transport::{circulation, TracerSet};

/// Column names of [`DiagnosticsRecord::to_csv_row`].
pub const CSV_HEADER: &str =
    "t,H,L,norm_v_p,norm_vp_q,mom_x,mom_y,ang_mom,circ,div_v_inf,curl_vp_inf,dissipation";

/// One row of the diagnostics series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// `∫|v_p|^q/q`.
    pub hamiltonian: f64,
    /// `∫|v|^p/p`.
    pub lagrangian: f64,
    /// `‖v‖_p`.
    pub norm_v_p: f64,
    /// `‖v_p‖_q`.
    pub norm_vp_q: f64,
    /// `∫v_p`.
    pub mom: [f64; 2],
    /// `∫(x - c) × v_p` about the domain centre `c`. On the torus this is
    /// only conserved for rotationally symmetric data.
    pub ang_mom: f64,
    /// `∮v_p·dx` on the tracked curve, `NaN` when no curve is tracked.
    pub circ: f64,
    pub div_v_inf: f64,
    pub curl_vp_inf: f64,
    /// The model's energy loss rate `-dH/dt`: `qνH` for the damped model,
    /// `ν‖∇v‖₂²` for γ = 2, and `ν‖∇v‖_γ^γ + ε∫∇v:∇v_p` for the momentum
    /// form. Zero for inviscid runs.
    pub dissipation: f64,
}

impl DiagnosticsRecord {
    /// Comma-separated values at 17 significant digits.
    pub fn to_csv_row(&self) -> String {
        let fields = [
            self.t,
            self.hamiltonian,
            self.lagrangian,
            self.norm_v_p,
            self.norm_vp_q,
            self.mom[0],
            self.mom[1],
            self.ang_mom,
            self.circ,
            self.div_v_inf,
            self.curl_vp_inf,
            self.dissipation,
        ];
        let mut out = String::new();
        for (i, x) in fields.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{x:.16e}");
        }
        out
    }

    pub fn from_csv_row(row: &str) -> Result<Self> {
        let vals: Vec<f64> = row
            .trim()
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidParameter(format!("bad diagnostics row {row:?}: {e}")))?;
        if vals.len() != 12 {
            return Err(Error::InvalidParameter(format!(
                "diagnostics row has {} columns, expected 12",
                vals.len()
            )));
        }
        Ok(Self {
            t: vals[0],
            hamiltonian: vals[1],
            lagrangian: vals[2],
            norm_v_p: vals[3],
            norm_vp_q: vals[4],
            mom: [vals[5], vals[6]],
            ang_mom: vals[7],
            circ: vals[8],
            div_v_inf: vals[9],
            curl_vp_inf: vals[10],
            dissipation: vals[11],
        })
    }
}

/// `Σ_c ∇a_c·∇b_c h²`.
fn gradient_pairing(a: &VectorField2, b: &VectorField2) -> f64 {
    let (au, av) = (grad(&a.u_field()), grad(&a.v_field()));
    let (bu, bv) = (grad(&b.u_field()), grad(&b.v_field()));
    let g = a.grid;
    par::sum(g.len(), g.nx, |k| {
        au.u[k] * bu.u[k] + au.v[k] * bu.v[k] + av.u[k] * bv.u[k] + av.v[k] * bv.v[k]
    }) * g.cell_area()
}

/// All record fields for state `s`.
pub fn conserved_quantities(
    s: &FlowState,
    curve: Option<&TracerSet>,
    cfg: &StepConfig,
) -> Result<DiagnosticsRecord> {
    let e = cfg.p;
    let (p, q) = (e.p(), e.q());
    let g = *s.grid();
    let (v, vp) = (&s.v, &s.v_p);
    let a = lp_norm_pow(v, p)?;
    let b = lp_norm_pow(vp, q)?;
    let [cx, cy] = g.center();
    let ang_mom = par::sum(g.len(), g.nx, |k| {
        let [x, y] = g.point(k);
        (x - cx) * vp.v[k] - (y - cy) * vp.u[k]
    }) * g.cell_area();
    let circ = match curve {
        Some(c) => circulation(c, vp)?,
        None => f64::NAN,
    };
    let dissipation = match cfg.model {
        Model::Inviscid => 0.0,
        Model::Damped => q * cfg.nu * (b / q),
        Model::Gamma2 => {
            let w = curl2(v);
            cfg.nu * w.dot(&w)
        }
        Model::MomentumGammaP => {
            let mut d = 0.0;
            if cfg.nu > 0.0 {
                d += cfg.nu * gamma_dissipation(v, cfg.gamma, cfg.plap.delta);
            }
            if cfg.eps > 0.0 {
                d += cfg.eps * gradient_pairing(v, vp);
            }
            d
        }
    };
    Ok(DiagnosticsRecord {
        t: s.t,
        hamiltonian: b / q,
        lagrangian: a / p,
        norm_v_p: a.powf(1.0 / p),
        norm_vp_q: b.powf(1.0 / q),
        mom: vp.integral(),
        ang_mom,
        circ,
        div_v_inf: div(v).max_abs(),
        curl_vp_inf: curl2(vp).max_abs(),
        dissipation,
    })
}

/// Budget check at one interior record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetEntry {
    pub t: f64,
    /// Central difference of `H`.
    pub dh_dt: f64,
    /// Model prediction of `dH/dt`.
    pub predicted: f64,
    /// `|dh_dt - predicted|` relative to the dissipation at that record,
    /// or to `H(0)` per unit time when nothing is dissipated.
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetReport {
    pub entries: Vec<BudgetEntry>,
    pub max_violation: f64,
}

/// Compare the central-difference `dH/dt` of a uniformly spaced series with
/// the model's prediction at every interior record.
pub fn energy_budget(series: &[DiagnosticsRecord], model: Model) -> Result<BudgetReport> {
    if series.len() < 3 {
        return Err(Error::InsufficientSeries {
            needed: 3,
            got: series.len(),
        });
    }
    let step = series[1].t - series[0].t;
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "record times must increase, got spacing {step}"
        )));
    }
    for w in series.windows(2) {
        let d = w[1].t - w[0].t;
        if (d - step).abs() > 1e-9 * step {
            return Err(Error::InvalidParameter(format!(
                "non-uniform record spacing {d} vs {step}"
            )));
        }
    }
    let h0 = series[0].hamiltonian.abs();
    let entries: Vec<BudgetEntry> = series
        .windows(3)
        .map(|w| {
            let dh_dt = (w[2].hamiltonian - w[0].hamiltonian) / (w[2].t - w[0].t);
            let predicted = match model {
                Model::Inviscid => 0.0,
                _ => -w[1].dissipation,
            };
            let scale = if predicted.abs() > 1e-12 * h0 {
                predicted.abs()
            } else {
                h0.max(f64::MIN_POSITIVE)
            };
            BudgetEntry {
                t: w[1].t,
                dh_dt,
                predicted,
                violation: (dh_dt - predicted).abs() / scale,
            }
        })
        .collect();
    let max_violation = entries.iter().map(|e| e.violation).fold(0.0, f64::max);
    Ok(BudgetReport {
        entries,
        max_violation,
    })
}

/// `(‖v‖_p^p, ‖|v|^{p-2}v‖_q^q)`, equal up to round-off.
pub fn dual_norm_check(v: &VectorField2, p: f64) -> Result<(f64, f64)> {
    let e = PExponent::new(p)?;
    Ok((lp_norm_pow(v, p)?, lp_norm_pow(&p_power(v, e), e.q())?))
}

/// `Σ_n ‖v_{n+h} - v_n‖_p^p dt`, the discrete `‖τ_h v - v‖^p` in
/// `L^p(0, T; L^p)`, for snapshots `dt` apart and a shift of `h_shift`
/// snapshots.
pub fn time_shift_norm(snapshots: &[VectorField2], dt: f64, h_shift: usize, p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    if h_shift == 0 {
        return Err(Error::InvalidParameter(
            "time shift must be at least one snapshot".into(),
        ));
    }
    if snapshots.len() <= h_shift {
        return Err(Error::InsufficientSeries {
            needed: h_shift + 1,
            got: snapshots.len(),
        });
    }
    let mut total = 0.0;
    for n in 0..snapshots.len() - h_shift {
        total += lp_norm_pow(&snapshots[n + h_shift].sub(&snapshots[n]), p)? * dt;
    }
    Ok(total)
}
