//! Time integration of the inviscid, damped, γ = 2 and momentum-form
//! systems.
//!
//! Vorticity-form runs carry `ω_p` and recover `ψ` from `-Δ_p ψ = ω_p`
//! after every stage, warm-starting the elliptic solve. The momentum form
//! advances `v_p` directly and restores incompressibility by a projection.

mod classical;
mod mollify;

pub use classical::ClassicalEuler;
pub use mollify::{mollify, mollify_vec, Mollifier};

use crate::error::{Error, Result};
use crate::fields::{curl2, div, grad, perp_grad, Grid2D, ScalarField, VectorField2};
use crate::plaplacian::{apply_gamma_laplacian_vec, coefficient, PLaplaceSolver, PlapConfig};
use crate::pmomentum::{p_power, q_power, PExponent};
use crate::spectral::{remove_gradient_null_space, Spectral};
use crate::transport::{
    semi_lagrangian, semi_lagrangian_two_level, ssp_rk3, upwind3_tendency, Scheme,
};

/// Stability constant of the explicit biharmonic term, `dt ≤ β h⁴/ν`.
pub const BIHARMONIC_BETA: f64 = 0.4;
/// Relative tolerance of the semi-Lagrangian predictor solve.
const PREDICTOR_TOL: f64 = 1e-7;
/// Stability constant of the explicit momentum-form diffusion.
pub const DIFFUSION_BETA: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    /// `∂_t ω_p + v·∇ω_p = 0`.
    Inviscid,
    /// `∂_t ω_p + v·∇ω_p = -ν ω_p`.
    Damped,
    /// `∂_t ω_p + v·∇ω_p = -ν Δ²ψ`.
    Gamma2,
    /// Mollified momentum form with `γ = p`.
    MomentumGammaP,
}

impl std::str::FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "inviscid" => Ok(Model::Inviscid),
            "damped" => Ok(Model::Damped),
            "gamma2" => Ok(Model::Gamma2),
            "momentum" => Ok(Model::MomentumGammaP),
            _ => Err(format!(
                "unknown model `{s}` (expected inviscid, damped, gamma2 or momentum)"
            )),
        }
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Model::Inviscid => "inviscid",
            Model::Damped => "damped",
            Model::Gamma2 => "gamma2",
            Model::MomentumGammaP => "momentum",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig {
    pub p: PExponent,
    pub gamma: f64,
    pub nu: f64,
    /// Mollifier width; also the coefficient of the `ε Δ v_p` term.
    pub eps: f64,
    pub cfl: f64,
    pub plap: PlapConfig,
    pub scheme: Scheme,
    pub model: Model,
}

impl StepConfig {
    /// Defaults: `γ = p` (2 for the γ = 2 model), `ν = ε = 0`, `cfl = 0.5`.
    pub fn new(p: f64, model: Model) -> Result<Self> {
        let p = PExponent::new(p)?;
        let gamma = if model == Model::Gamma2 { 2.0 } else { p.p() };
        Ok(Self {
            p,
            gamma,
            nu: 0.0,
            eps: 0.0,
            cfl: 0.5,
            plap: PlapConfig::default(),
            scheme: Scheme::SemiLagrangian,
            model,
        })
    }

    pub fn with_nu(mut self, nu: f64) -> Self {
        self.nu = nu;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_cfl(mut self, cfl: f64) -> Self {
        self.cfl = cfl;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.p.p();
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "nu must be >= 0, got {}",
                self.nu
            )));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "eps must be >= 0, got {}",
                self.eps
            )));
        }
        if !(self.cfl > 0.0 && self.cfl <= 0.9) {
            return Err(Error::InvalidParameter(format!(
                "cfl must lie in (0, 0.9], got {}",
                self.cfl
            )));
        }
        if !(self.gamma > 1.0 && self.gamma < p + 1.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must lie in (1, p + 1) = (1, {}), got {}",
                p + 1.0,
                self.gamma
            )));
        }
        match self.model {
            Model::Gamma2 if self.gamma != 2.0 => Err(Error::InvalidParameter(format!(
                "the gamma = 2 model needs gamma = 2, got {}",
                self.gamma
            ))),
            Model::MomentumGammaP if self.gamma != p => Err(Error::InvalidParameter(format!(
                "the momentum form needs gamma = p = {p}, got {}",
                self.gamma
            ))),
            _ => self.plap.validate(),
        }
    }
}

/// One time level of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub omega_p: ScalarField,
    /// Stream function (vorticity-form runs).
    pub psi: Option<ScalarField>,
    pub v: VectorField2,
    pub v_p: VectorField2,
    /// Pressure (momentum-form runs, after the first step).
    pub pi: Option<ScalarField>,
}

impl FlowState {
    pub fn grid(&self) -> &Grid2D {
        &self.omega_p.grid
    }
}

/// Wide Laplacian `div(grad f)`.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    div(&grad(f))
}

fn vector_laplacian(w: &VectorField2) -> VectorField2 {
    VectorField2 {
        grid: w.grid,
        u: laplacian(&w.u_field()).values,
        v: laplacian(&w.v_field()).values,
    }
}

/// Skew-symmetric advection `½[(u·∇)w + div(u ⊗ w)]`, componentwise.
pub fn skew_advection(u: &VectorField2, w: &VectorField2) -> VectorField2 {
    let component = |c: &ScalarField| -> Vec<f64> {
        let g = grad(c);
        let flux = VectorField2 {
            grid: u.grid,
            u: u.u.iter().zip(&c.values).map(|(a, b)| a * b).collect(),
            v: u.v.iter().zip(&c.values).map(|(a, b)| a * b).collect(),
        };
        let d = div(&flux);
        (0..u.grid.len())
            .map(|k| 0.5 * (u.u[k] * g.u[k] + u.v[k] * g.v[k] + d.values[k]))
            .collect()
    };
    VectorField2 {
        grid: u.grid,
        u: component(&w.u_field()),
        v: component(&w.v_field()),
    }
}

/// Owns the elliptic solvers and scratch for one run.
#[derive(Debug)]
pub struct Stepper {
    cfg: StepConfig,
    grid: Grid2D,
    solver: PLaplaceSolver,
    dual: Option<PLaplaceSolver>,
    spectral: Spectral,
    mollifier: Mollifier,
    /// Newton iterations spent since construction.
    pub newton_iterations: usize,
    /// Inner conjugate-gradient iterations spent since construction.
    pub cg_iterations: usize,
    /// `(t, ψ)` at the last two time levels produced, for extrapolated
    /// warm starts.
    history: Option<[(f64, ScalarField); 2]>,
}

impl Stepper {
    pub fn new(grid: Grid2D, cfg: StepConfig) -> Result<Self> {
        cfg.validate()?;
        if !grid.is_periodic() {
            return Err(Error::InvalidGrid(
                "time stepping needs a periodic grid".into(),
            ));
        }
        let solver = PLaplaceSolver::new(grid, cfg.p, cfg.plap)?;
        let dual = if cfg.model == Model::MomentumGammaP && cfg.p.p() != 2.0 {
            Some(PLaplaceSolver::new(grid, cfg.p.dual(), cfg.plap)?)
        } else {
            None
        };
        Ok(Self {
            cfg,
            grid,
            solver,
            dual,
            spectral: Spectral::new(grid),
            mollifier: Mollifier::new(grid, cfg.eps),
            newton_iterations: 0,
            cg_iterations: 0,
            history: None,
        })
    }

    pub fn config(&self) -> &StepConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    fn solve_velocity(
        &mut self,
        omega: ScalarField,
        warm: Option<&ScalarField>,
    ) -> Result<(ScalarField, ScalarField, VectorField2)> {
        self.solve_velocity_to(omega, warm, self.cfg.plap.tol)
    }

    fn solve_velocity_to(
        &mut self,
        mut omega: ScalarField,
        warm: Option<&ScalarField>,
        tol: f64,
    ) -> Result<(ScalarField, ScalarField, VectorField2)> {
        remove_gradient_null_space(&mut omega);
        let (psi, stats) = self.solver.solve_to(&omega, warm, tol)?;
        self.newton_iterations += stats.iterations;
        self.cg_iterations += stats.cg_iterations;
        let v = perp_grad(&psi);
        Ok((omega, psi, v))
    }

    fn vorticity_state(
        &self,
        t: f64,
        omega_p: ScalarField,
        psi: ScalarField,
        v: VectorField2,
    ) -> FlowState {
        let v_p = p_power(&v, self.cfg.p);
        FlowState {
            t,
            omega_p,
            psi: Some(psi),
            v,
            v_p,
            pi: None,
        }
    }

    /// Build a vorticity-form state from `ω_p` (null-space components are
    /// removed first).
    pub fn state_from_vorticity(&mut self, omega_p: &ScalarField, t: f64) -> Result<FlowState> {
        crate::fields::check_same_grid(&self.grid, &omega_p.grid)?;
        let (omega, psi, v) = self.solve_velocity(omega_p.clone(), None)?;
        Ok(self.vorticity_state(t, omega, psi, v))
    }

    /// Build a momentum-form state from a velocity, projected onto
    /// discretely divergence-free fields.
    pub fn state_from_velocity(&mut self, v: &VectorField2, t: f64) -> Result<FlowState> {
        crate::fields::check_same_grid(&self.grid, &v.grid)?;
        let (v, _) = self.spectral.project_divergence_free(v);
        let v_p = p_power(&v, self.cfg.p);
        Ok(FlowState {
            t,
            omega_p: curl2(&v_p),
            psi: None,
            v,
            v_p,
            pi: None,
        })
    }

    /// Largest step allowed by an explicit stability bound, if any.
    pub fn dt_cap(&self, s: &FlowState) -> Option<f64> {
        let h = self.grid.hx().min(self.grid.hy());
        match self.cfg.model {
            Model::Gamma2 if self.cfg.nu > 0.0 => Some(BIHARMONIC_BETA * h.powi(4) / self.cfg.nu),
            Model::MomentumGammaP => {
                let (nu, eps, p, delta) = (
                    self.cfg.nu,
                    self.cfg.eps,
                    self.cfg.p.p(),
                    self.cfg.plap.delta,
                );
                let c = if nu > 0.0 {
                    let g = crate::fields::TensorField2::gradient_of(&s.v).frobenius();
                    let cmax = g
                        .values
                        .iter()
                        .map(|&m| coefficient(m * m, delta, p))
                        .fold(0.0, f64::max);
                    nu * (p - 1.0).max(1.0) * cmax
                } else {
                    0.0
                };
                let d = c + eps;
                (d > 0.0).then(|| DIFFUSION_BETA * h * h / d)
            }
            _ => None,
        }
    }

    /// Step from the Courant number, clipped by [`Stepper::dt_cap`].
    pub fn stable_dt(&self, s: &FlowState) -> f64 {
        let h = self.grid.hx().min(self.grid.hy());
        let vmax = s.v.max_magnitude();
        let cfl_dt = if vmax > 0.0 {
            self.cfg.cfl * h / vmax
        } else {
            f64::INFINITY
        };
        match self.dt_cap(s) {
            Some(cap) => cfl_dt.min(cap),
            None => cfl_dt,
        }
    }

    fn check_cap(&self, s: &FlowState, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dt must be positive, got {dt}"
            )));
        }
        if let Some(cap) = self.dt_cap(s) {
            if dt > cap {
                return Err(Error::DtTooLarge { requested: dt, cap });
            }
        }
        Ok(())
    }

    pub fn step(&mut self, s: &FlowState, dt: f64) -> Result<FlowState> {
        self.check_cap(s, dt)?;
        match self.cfg.model {
            Model::Inviscid => self.step_vorticity(s, dt, 0.0, 0.0),
            Model::Damped => self.step_vorticity(s, dt, self.cfg.nu, 0.0),
            Model::Gamma2 => self.step_vorticity(s, dt, 0.0, self.cfg.nu),
            Model::MomentumGammaP => self.step_momentum(s, dt),
        }
    }

    /// `-ν L² ψ` (exactly zero for `ν = 0`).
    fn biharmonic(psi: &ScalarField, nu: f64) -> ScalarField {
        if nu == 0.0 {
            return ScalarField::zeros(psi.grid);
        }
        laplacian(&laplacian(psi)).scaled(-nu)
    }

    /// Linear extrapolation `ψ^n + dt (ψ^n - ψ^{n-1}) / dt_prev` when `s`
    /// is the state this stepper produced last.
    fn extrapolate(&self, s: &FlowState, psi: &ScalarField, dt: f64) -> Option<ScalarField> {
        let [(t0, psi_prev), (t1, psi_last)] = self.history.as_ref()?;
        if *t1 != s.t || psi_last != psi || !(s.t > *t0) {
            return None;
        }
        Some(psi.axpy(dt / (s.t - t0), &psi.sub(psi_prev)))
    }

    fn step_vorticity(
        &mut self,
        s: &FlowState,
        dt: f64,
        damping: f64,
        hyper: f64,
    ) -> Result<FlowState> {
        let psi0 = s.psi.as_ref().ok_or_else(|| {
            Error::InvalidParameter("vorticity-form step needs a stream function".into())
        })?;
        let t = s.t + dt;
        match self.cfg.scheme {
            Scheme::SemiLagrangian => {
                let decay = (-damping * dt).exp();
                // Forcing is split trapezoidally along the trajectory.
                let f0 = Self::biharmonic(psi0, hyper);
                let predictor =
                    semi_lagrangian(&s.omega_p.axpy(dt, &f0), &s.v, dt, 1).scaled(decay);
                let guess = self.extrapolate(s, psi0, dt);
                // The predicted velocity only shapes the trajectories.
                let tol = self.cfg.plap.tol.max(PREDICTOR_TOL);
                let (_, psi1, v1) =
                    self.solve_velocity_to(predictor, Some(guess.as_ref().unwrap_or(psi0)), tol)?;
                let f1 = Self::biharmonic(&psi1, hyper);
                let corrected =
                    semi_lagrangian_two_level(&s.omega_p.axpy(0.5 * dt, &f0), &s.v, &v1, dt)
                        .scaled(decay)
                        .axpy(0.5 * dt, &f1);
                let (omega, psi, v) = self.solve_velocity(corrected, Some(&psi1))?;
                self.history = Some([(s.t, psi0.clone()), (t, psi.clone())]);
                Ok(self.vorticity_state(t, omega, psi, v))
            }
            Scheme::Upwind3 => {
                let mut warm = psi0.clone();
                let mut tendency = |w: &ScalarField| -> Result<ScalarField> {
                    let (w, psi, v) = self.solve_velocity(w.clone(), Some(&warm))?;
                    let mut l = upwind3_tendency(&w, &v);
                    if hyper > 0.0 {
                        l = l.axpy(1.0, &Self::biharmonic(&psi, hyper));
                    }
                    warm = psi;
                    Ok(l)
                };
                let next = if damping == 0.0 {
                    ssp_rk3(&s.omega_p, dt, &mut tendency)?
                } else {
                    // Integrating-factor SSP-RK3 for the linear damping.
                    let e = |tau: f64| (-damping * tau).exp();
                    let u = &s.omega_p;
                    let u1 = u.axpy(dt, &tendency(u)?).scaled(e(dt));
                    let s1 = u1.axpy(dt, &tendency(&u1)?);
                    let u2 = u.scaled(0.75 * e(0.5 * dt)).axpy(0.25 * e(-0.5 * dt), &s1);
                    let s2 = u2.axpy(dt, &tendency(&u2)?);
                    u.scaled(e(dt) / 3.0).axpy(2.0 / 3.0 * e(0.5 * dt), &s2)
                };
                let (omega, psi, v) = self.solve_velocity(next, Some(&warm))?;
                Ok(self.vorticity_state(t, omega, psi, v))
            }
        }
    }

    fn momentum_tendency(&self, vp: &VectorField2) -> Result<VectorField2> {
        let cfg = &self.cfg;
        let v = q_power(vp, cfg.p);
        let u = self.mollifier.apply_vec(&v);
        let mut out = skew_advection(&u, vp).scaled(-1.0);
        if cfg.nu > 0.0 {
            out = out.axpy(
                cfg.nu,
                &apply_gamma_laplacian_vec(&v, cfg.p.p(), &cfg.plap)?,
            );
        }
        if cfg.eps > 0.0 {
            out = out.axpy(cfg.eps, &vector_laplacian(vp));
        }
        Ok(out)
    }

    /// Project `w = v_p*`: returns `(v_p, potential)` with `w = v_p + ∇φ`
    /// and `div(q_power(v_p)) = 0`.
    pub fn project_momentum(
        &mut self,
        w: &VectorField2,
        warm: Option<&ScalarField>,
    ) -> Result<(VectorField2, ScalarField)> {
        match self.dual.as_mut() {
            None => Ok(self.spectral.project_divergence_free(w)),
            Some(dual) => {
                let zero = ScalarField::zeros(w.grid);
                let (phi, stats) = dual.solve_shifted(&zero, w, warm)?;
                self.newton_iterations += stats.iterations;
                self.cg_iterations += stats.cg_iterations;
                Ok((w.sub(&grad(&phi)), phi))
            }
        }
    }

    /// SSP-RK3 in Shu-Osher form with a projection after every stage.
    /// Stage `k` projects a state whose pressure increment is `c_k dt π`.
    fn step_momentum(&mut self, s: &FlowState, dt: f64) -> Result<FlowState> {
        let warm = |c: f64| s.pi.as_ref().map(|pi| pi.scaled(c * dt));
        let u0 = &s.v_p;
        let w1 = u0.axpy(dt, &self.momentum_tendency(u0)?);
        let (u1, _) = self.project_momentum(&w1, warm(1.0).as_ref())?;
        let s1 = u1.axpy(dt, &self.momentum_tendency(&u1)?);
        let w2 = u0.scaled(0.75).axpy(0.25, &s1);
        let (u2, _) = self.project_momentum(&w2, warm(0.25).as_ref())?;
        let s2 = u2.axpy(dt, &self.momentum_tendency(&u2)?);
        let w3 = u0.scaled(1.0 / 3.0).axpy(2.0 / 3.0, &s2);
        let (v_p, phi) = self.project_momentum(&w3, warm(2.0 / 3.0).as_ref())?;
        let v = q_power(&v_p, self.cfg.p);
        let pi = phi.scaled(1.5 / dt);
        Ok(FlowState {
            t: s.t + dt,
            omega_p: curl2(&v_p),
            psi: None,
            v,
            v_p,
            pi: Some(pi),
        })
    }
}

fn with_model(cfg: &StepConfig, model: Model) -> StepConfig {
    StepConfig { model, ..*cfg }
}

/// One inviscid p-Euler step.
pub fn step_p_euler(s: &FlowState, cfg: &StepConfig, dt: f64) -> Result<FlowState> {
    Stepper::new(*s.grid(), with_model(cfg, Model::Inviscid))?.step(s, dt)
}

/// One step of the linearly damped model.
pub fn step_p_euler_damped(s: &FlowState, cfg: &StepConfig, dt: f64) -> Result<FlowState> {
    Stepper::new(*s.grid(), with_model(cfg, Model::Damped))?.step(s, dt)
}

/// One step of the γ = 2 vorticity form.
pub fn step_pns_gamma2(s: &FlowState, cfg: &StepConfig, dt: f64) -> Result<FlowState> {
    let cfg = StepConfig {
        gamma: 2.0,
        ..with_model(cfg, Model::Gamma2)
    };
    Stepper::new(*s.grid(), cfg)?.step(s, dt)
}

/// One step of the mollified momentum form (`γ = p`).
pub fn step_pns_momentum(s: &FlowState, cfg: &StepConfig, dt: f64) -> Result<FlowState> {
    Stepper::new(*s.grid(), with_model(cfg, Model::MomentumGammaP))?.step(s, dt)
}
