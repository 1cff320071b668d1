use super::{coefficient, pow_fast, source_mean_check, Method, PlapConfig};
use crate::error::{Error, Result};
use crate::fields::{div, grad, Grid2D, ScalarField, VectorField2};
use crate::par;
use crate::pmomentum::PExponent;
use crate::spectral::{remove_gradient_null_space, Spectral};

/// Armijo sufficient-decrease constant.
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACK: usize = 60;
const MAX_CG: usize = 400;
/// Coefficients below this fraction of the maximum count as degenerate.
const DEGENERATE_FLOOR: f64 = 1e-3;
/// Share of degenerate points above which the preconditioner is rescaled.
const DEGENERATE_FRACTION: f64 = 0.05;
const DIRECT_ATTEMPT: usize = 25;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    /// Outer (Newton or NCG) iterations.
    pub iterations: usize,
    pub cg_iterations: usize,
    /// Steps that fell back to preconditioned steepest descent.
    pub fallback_steps: usize,
    /// Final `‖apply_p_laplacian(ψ) - ω‖₂`.
    pub residual: f64,
    /// The target the residual was compared against.
    pub tolerance: f64,
    /// Energy of every accepted iterate, starting with the initial guess.
    /// With δ-continuation only the final stage (target δ) is kept.
    pub energies: Vec<f64>,
}

/// Reusable solver for `-Δ_p ψ = ω` on one periodic grid.
///
/// [`PLaplaceSolver::solve_shifted`] minimises the shifted energy
/// `Σ [(|∇ψ - w|² + δ²)^{p/2}/p - ωψ] h²` with the same machinery.
#[derive(Debug)]
pub struct PLaplaceSolver {
    p: PExponent,
    cfg: PlapConfig,
    spectral: Spectral,
    shift: Option<VectorField2>,
    // Hessian coefficients of the current iterate.
    kxx: Vec<f64>,
    kxy: Vec<f64>,
    kyy: Vec<f64>,
    kbar: f64,
    scaling: Option<Vec<f64>>,
}

impl PLaplaceSolver {
    pub fn new(grid: Grid2D, p: PExponent, cfg: PlapConfig) -> Result<Self> {
        cfg.validate()?;
        if !grid.is_periodic() {
            return Err(Error::InvalidGrid(
                "the p-Poisson solver needs a periodic grid".into(),
            ));
        }
        let n = grid.len();
        Ok(Self {
            p,
            cfg,
            spectral: Spectral::new(grid),
            shift: None,
            kxx: vec![0.0; n],
            kxy: vec![0.0; n],
            kyy: vec![0.0; n],
            kbar: 1.0,
            scaling: None,
        })
    }

    pub fn grid(&self) -> &Grid2D {
        self.spectral.grid()
    }

    pub fn exponent(&self) -> PExponent {
        self.p
    }

    pub fn config(&self) -> &PlapConfig {
        &self.cfg
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    /// Check the compatibility condition and remove the components of `ω`
    /// the central gradient cannot see (checkerboard modes).
    pub fn compatible_source(&self, omega: &ScalarField) -> Result<ScalarField> {
        crate::fields::check_same_grid(self.grid(), &omega.grid)?;
        source_mean_check(omega)?;
        let mut w = omega.clone();
        remove_gradient_null_space(&mut w);
        Ok(w)
    }

    fn shifted_grad(&self, psi: &ScalarField) -> VectorField2 {
        let g = grad(psi);
        match &self.shift {
            Some(w) => g.sub(w),
            None => g,
        }
    }

    fn residual(&self, psi: &ScalarField, omega: &ScalarField) -> ScalarField {
        let mut g = self.shifted_grad(psi);
        let (p, delta) = (self.p.p(), self.cfg.delta);
        let n = g.grid.len();
        let coef = par::collect(n, |k| {
            coefficient(g.u[k] * g.u[k] + g.v[k] * g.v[k], delta, p)
        });
        g.u.iter_mut().zip(&coef).for_each(|(x, c)| *x *= c);
        g.v.iter_mut().zip(&coef).for_each(|(x, c)| *x *= c);
        let mut r = div(&g);
        r.values
            .iter_mut()
            .zip(&omega.values)
            .for_each(|(x, w)| *x = -*x - w);
        r
    }

    /// Energy and a positive scale for round-off decisions.
    fn energy_parts(&self, psi: &ScalarField, omega: &ScalarField) -> (f64, f64) {
        let p = self.p.p();
        let g = self.shifted_grad(psi);
        let d2 = self.cfg.delta * self.cfg.delta;
        let n = g.grid.len();
        let area = g.grid.cell_area();
        let density = |k: usize| pow_fast(g.u[k] * g.u[k] + g.v[k] * g.v[k] + d2, 0.5 * p) / p;
        let j = par::sum(n, g.grid.nx, |k| {
            density(k) - omega.values[k] * psi.values[k]
        }) * area;
        let scale = par::sum(n, g.grid.nx, |k| {
            density(k) + (omega.values[k] * psi.values[k]).abs()
        }) * area;
        (j, scale)
    }

    fn initial_guess(&self, omega: &ScalarField) -> ScalarField {
        if let Some(w) = &self.shift {
            // Exact for p = 2: -L ψ = ω - div w.
            return self.spectral.solve_neg_laplacian(&omega.sub(&div(w)));
        }
        let lin = self.spectral.solve_neg_laplacian(omega);
        let p = self.p.p();
        if p == 2.0 {
            return lin;
        }
        let a = omega.dot(&lin);
        let g = grad(&lin);
        let n = g.grid.len();
        let b = par::sum(n, g.grid.nx, |k| {
            (g.u[k] * g.u[k] + g.v[k] * g.v[k]).powf(0.5 * p)
        }) * g.grid.cell_area();
        if !(a > 0.0 && b > 0.0) {
            return ScalarField::zeros(omega.grid);
        }
        lin.scaled((a / b).powf(1.0 / (p - 1.0)))
    }

    fn update_hessian(&mut self, psi: &ScalarField) {
        let p = self.p.p();
        let g = self.shifted_grad(psi);
        let n = g.grid.len();
        // A floor keeps the Hessian finite at critical points when δ = 0;
        // it only shapes the search direction, never the energy.
        let gmax = g.max_magnitude();
        let delta = self
            .cfg
            .delta
            .max(1e-12 * gmax)
            .max(f64::MIN_POSITIVE.sqrt());
        let d2 = delta * delta;
        let c = par::collect(n, |k| {
            coefficient(g.u[k] * g.u[k] + g.v[k] * g.v[k], delta, p)
        });
        let c2 = |k: usize| (p - 2.0) * c[k] / (g.u[k] * g.u[k] + g.v[k] * g.v[k] + d2);
        par::fill(&mut self.kxx, |k| c[k] + c2(k) * g.u[k] * g.u[k]);
        par::fill(&mut self.kxy, |k| c2(k) * g.u[k] * g.v[k]);
        par::fill(&mut self.kyy, |k| c[k] + c2(k) * g.v[k] * g.v[k]);
        let tr = par::sum(n, g.grid.nx, |k| 0.5 * (self.kxx[k] + self.kyy[k])) / n as f64;
        self.kbar = if tr > 0.0 && tr.is_finite() { tr } else { 1.0 };
        let trace = |k: usize| 0.5 * (self.kxx[k] + self.kyy[k]);
        let kmax = par::max(n, trace);
        let floor = DEGENERATE_FLOOR * kmax;
        let degenerate = (0..n).filter(|&k| trace(k) < floor).count();
        self.scaling = (p > 2.0
            && kmax > 0.0
            && kmax.is_finite()
            && degenerate as f64 > DEGENERATE_FRACTION * n as f64)
            .then(|| par::collect(n, |k| 1.0 / trace(k).max(floor).sqrt()));
    }

    /// Hessian action `-div(K ∇d)`.
    fn hess_apply(&self, d: &ScalarField) -> ScalarField {
        let mut g = grad(d);
        let n = g.grid.len();
        let fu = par::collect(n, |k| self.kxx[k] * g.u[k] + self.kxy[k] * g.v[k]);
        let fv = par::collect(n, |k| self.kxy[k] * g.u[k] + self.kyy[k] * g.v[k]);
        g.u = fu;
        g.v = fv;
        let mut r = div(&g);
        r.values.iter_mut().for_each(|x| *x = -*x);
        r
    }

    /// `L⁻¹ r / k̄`, or `S L⁻¹ S r` with `S = k^{-1/2}` when the
    /// coefficient is degenerate on a large part of the domain.
    fn precondition(&self, r: &ScalarField) -> ScalarField {
        let Some(sc) = &self.scaling else {
            return self.spectral.solve_neg_laplacian(r).scaled(1.0 / self.kbar);
        };
        let mut t = r.clone();
        t.values.iter_mut().zip(sc).for_each(|(x, s)| *x *= s);
        let mut z = self.spectral.solve_neg_laplacian(&t);
        z.values.iter_mut().zip(sc).for_each(|(x, s)| *x *= s);
        z
    }

    /// Preconditioned CG on `H d = rhs`, stopped at relative residual `eta`.
    fn pcg(&self, rhs: &ScalarField, eta: f64) -> (ScalarField, usize) {
        let grid = rhs.grid;
        let mut x = ScalarField::zeros(grid);
        let mut res = rhs.clone();
        let target = eta * rhs.l2_norm();
        let mut z = self.precondition(&res);
        let mut dir = z.clone();
        let mut rz = res.dot(&z);
        let mut it = 0;
        while it < MAX_CG {
            it += 1;
            let hd = self.hess_apply(&dir);
            let dhd = dir.dot(&hd);
            if !(dhd > 0.0) {
                break;
            }
            let alpha = rz / dhd;
            x = x.axpy(alpha, &dir);
            res = res.axpy(-alpha, &hd);
            if res.l2_norm() <= target {
                break;
            }
            z = self.precondition(&res);
            let rz_new = res.dot(&z);
            let beta = rz_new / rz;
            rz = rz_new;
            dir = z.axpy(beta, &dir);
        }
        (x, it)
    }

    /// Solve from an optional warm start. Returns the mean-zero solution.
    pub fn solve(
        &mut self,
        omega: &ScalarField,
        warm: Option<&ScalarField>,
    ) -> Result<(ScalarField, SolveStats)> {
        self.shift = None;
        self.minimise(omega, warm)
    }

    /// [`PLaplaceSolver::solve`] with the relative tolerance replaced by
    /// `tol`.
    pub fn solve_to(
        &mut self,
        omega: &ScalarField,
        warm: Option<&ScalarField>,
        tol: f64,
    ) -> Result<(ScalarField, SolveStats)> {
        let saved = self.cfg.tol;
        self.cfg.tol = tol;
        let out = self.solve(omega, warm);
        self.cfg.tol = saved;
        out
    }

    /// Minimise the shifted energy; `ω = 0` gives the potential `π` of the
    /// nonlinear Helmholtz split `w = ∇π + r` with `div(|r|^{p-2} r) = 0`.
    pub fn solve_shifted(
        &mut self,
        omega: &ScalarField,
        shift: &VectorField2,
        warm: Option<&ScalarField>,
    ) -> Result<(ScalarField, SolveStats)> {
        crate::fields::check_same_grid(self.grid(), &shift.grid)?;
        self.shift = Some(shift.clone());
        let out = self.minimise(omega, warm);
        self.shift = None;
        out
    }

    fn minimise(
        &mut self,
        omega: &ScalarField,
        warm: Option<&ScalarField>,
    ) -> Result<(ScalarField, SolveStats)> {
        let omega = self.compatible_source(omega)?;
        let start = match warm {
            Some(w) => {
                crate::fields::check_same_grid(self.grid(), &w.grid)?;
                let mut w = w.clone();
                remove_gradient_null_space(&mut w);
                w
            }
            None => self.initial_guess(&omega),
        };
        let tolerance = self.cfg.tol * omega.l2_norm().max(1.0);
        let mut stats = SolveStats {
            tolerance,
            ..Default::default()
        };
        // Below p = 2 a stalled direct attempt is cut short and handed to
        // the continuation below.
        let cap = if self.p.p() >= 2.0 {
            self.cfg.max_iter
        } else {
            self.cfg.max_iter.min(DIRECT_ATTEMPT)
        };
        let direct = self.iterate(start.clone(), &omega, tolerance, cap, &mut stats);
        if self.p.p() >= 2.0 || !matches!(direct, Err(Error::NoConvergence { .. })) {
            return direct.map(|psi| (psi, stats));
        }
        // Exponents below 2 make the Hessian blow up where the gradient
        // vanishes. Retry along a decreasing sequence of δ.
        let target = self.cfg.delta;
        let scale = {
            let g = self.shifted_grad(&start);
            (g.dot(&g) / g.grid.area()).sqrt()
        };
        let mut stage = 0.1 * scale;
        let mut psi = start;
        let budget = self.cfg.max_iter;
        let result = loop {
            let last = stage <= 10.0 * target || !(stage > 0.0);
            self.cfg.delta = if last { target } else { stage };
            let (tol, cap) = if last {
                (tolerance, budget)
            } else {
                (tolerance.max(1e-3 * stage * scale), budget / 4 + 1)
            };
            let mut stage_stats = SolveStats {
                tolerance: tol,
                ..Default::default()
            };
            let out = self.iterate(psi.clone(), &omega, tol, cap, &mut stage_stats);
            stats.iterations += stage_stats.iterations;
            stats.cg_iterations += stage_stats.cg_iterations;
            stats.fallback_steps += stage_stats.fallback_steps;
            stats.residual = stage_stats.residual;
            if last {
                // Earlier stages minimise a different functional.
                stats.energies = stage_stats.energies;
            }
            match out {
                Ok(next) => psi = next,
                Err(Error::NoConvergence { .. }) if !last => {}
                Err(e) => break Err(e),
            }
            if last {
                break Ok(psi);
            }
            stage *= 0.1;
        };
        self.cfg.delta = target;
        result.map(|psi| (psi, stats))
    }

    /// Newton or NCG iterations from `psi` until the residual drops below
    /// `tolerance` or `max_iter` steps were taken.
    fn iterate(
        &mut self,
        mut psi: ScalarField,
        omega: &ScalarField,
        tolerance: f64,
        max_iter: usize,
        stats: &mut SolveStats,
    ) -> Result<ScalarField> {
        let omega = omega.clone();
        let start_iter = stats.iterations;
        let mut r = self.residual(&psi, &omega);
        let mut res = r.l2_norm();
        let res0 = res.max(f64::MIN_POSITIVE);
        let (mut j, mut jscale) = self.energy_parts(&psi, &omega);
        stats.energies.push(j);
        // NCG memory
        let mut prev: Option<(ScalarField, ScalarField, ScalarField)> = None;

        loop {
            stats.residual = res;
            if res <= tolerance {
                return Ok(psi);
            }
            if stats.iterations - start_iter >= max_iter {
                return Err(Error::NoConvergence {
                    iterations: stats.iterations,
                    residual: res,
                });
            }
            stats.iterations += 1;
            self.update_hessian(&psi);

            let neg_r = r.scaled(-1.0);
            let mut d = match self.cfg.method {
                Method::NewtonLS => {
                    // Forcing term: superlinear, but no oversolving near the tolerance.
                    let eta = (res / res0).min(0.01).max(0.1 * tolerance / res);
                    let (d, its) = self.pcg(&neg_r, eta);
                    stats.cg_iterations += its;
                    d
                }
                Method::NCG => {
                    let z = self.precondition(&r);
                    let mut d = z.scaled(-1.0);
                    if let Some((r_prev, z_prev, d_prev)) = &prev {
                        let num = r.sub(r_prev).dot(&z);
                        let den = r_prev.dot(z_prev);
                        let beta = if den > 0.0 { (num / den).max(0.0) } else { 0.0 };
                        d = d.axpy(beta, d_prev);
                    }
                    prev = Some((r.clone(), z, d.clone()));
                    d
                }
            };
            let mut slope = r.dot(&d);
            if !(slope < 0.0) || !d.is_finite() {
                stats.fallback_steps += 1;
                d = self.precondition(&r).scaled(-1.0);
                slope = r.dot(&d);
                if let Some(m) = prev.as_mut() {
                    m.2 = d.clone();
                }
            }
            let mut alpha = match self.cfg.method {
                Method::NewtonLS => 1.0,
                Method::NCG => {
                    let dhd = d.dot(&self.hess_apply(&d));
                    if dhd > 0.0 {
                        -slope / dhd
                    } else {
                        1.0
                    }
                }
            };

            let roundoff = slope.abs() <= 1e-12 * jscale;
            let mut accepted = None;
            for _ in 0..MAX_BACKTRACK {
                let trial = psi.axpy(alpha, &d);
                let (jt, st) = self.energy_parts(&trial, &omega);
                if jt <= j + ARMIJO * alpha * slope {
                    accepted = Some((trial, jt, st));
                    break;
                }
                if roundoff {
                    // Energy changes are below round-off; use the residual as merit.
                    let rt = self.residual(&trial, &omega).l2_norm();
                    if rt < res {
                        accepted = Some((trial, jt, st));
                        break;
                    }
                }
                alpha *= 0.5;
            }
            let Some((mut trial, jt, st)) = accepted else {
                return Err(Error::NoConvergence {
                    iterations: stats.iterations,
                    residual: res,
                });
            };
            remove_gradient_null_space(&mut trial);
            psi = trial;
            j = jt;
            jscale = st;
            stats.energies.push(j);
            r = self.residual(&psi, &omega);
            res = r.l2_norm();
        }
    }
}

/// Solve `-Δ_p ψ = ω` on a periodic grid, returning the mean-zero solution.
pub fn solve_p_poisson(omega: &ScalarField, p: PExponent, cfg: &PlapConfig) -> Result<ScalarField> {
    let mut solver = PLaplaceSolver::new(omega.grid, p, *cfg)?;
    solver.solve(omega, None).map(|(psi, _)| psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plaplacian::apply_p_laplacian;

    fn manufactured(n: usize, p: f64) -> (ScalarField, ScalarField) {
        let grid = Grid2D::periodic_2pi(n).unwrap();
        let psi = ScalarField::from_fn(grid, |x, y| x.sin() + 0.5 * (2.0 * y).cos() * x.cos());
        let omega = apply_p_laplacian(&psi, PExponent::new(p).unwrap(), &PlapConfig::default());
        (psi, omega)
    }

    #[test]
    fn eigenfunction_inverse_p2() {
        let grid = Grid2D::periodic_2pi(64).unwrap();
        let omega = ScalarField::from_fn(grid, |x, y| 2.0 * x.sin() * y.sin());
        let psi =
            solve_p_poisson(&omega, PExponent::new(2.0).unwrap(), &PlapConfig::default()).unwrap();
        // The composed stencil has eigenvalue 2 (sin h / h)² on this mode.
        let h = grid.hx();
        let lam = 2.0 * (h.sin() / h).powi(2);
        let err = psi
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let [x, y] = grid.point(k);
                (v - 2.0 / lam * x.sin() * y.sin()).abs()
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "err {err}");
    }

    #[test]
    fn manufactured_all_exponents() {
        for &p in &[1.5, 2.0, 3.0, 4.0] {
            for method in [Method::NewtonLS, Method::NCG] {
                let (psi_star, omega) = manufactured(32, p);
                let cfg = PlapConfig {
                    method,
                    max_iter: 2000,
                    ..Default::default()
                };
                let mut solver =
                    PLaplaceSolver::new(omega.grid, PExponent::new(p).unwrap(), cfg).unwrap();
                let (psi, stats) = solver.solve(&omega, None).unwrap();
                assert!(
                    stats.residual <= stats.tolerance,
                    "p={p} {method:?} {stats:?}"
                );
                for w in stats.energies.windows(2) {
                    assert!(
                        w[1] <= w[0] + 1e-13 * w[0].abs().max(1.0),
                        "p={p} {method:?} ascent {} -> {}",
                        w[0],
                        w[1]
                    );
                }
                let err = psi.sub(&psi_star).max_abs();
                assert!(err < 1e-5, "p={p} {method:?} err {err}");
            }
        }
    }

    #[test]
    fn zero_source_gives_zero() {
        let grid = Grid2D::periodic_2pi(16).unwrap();
        let psi = solve_p_poisson(
            &ScalarField::zeros(grid),
            PExponent::new(3.0).unwrap(),
            &PlapConfig::default(),
        )
        .unwrap();
        assert_eq!(psi.max_abs(), 0.0);
    }

    #[test]
    fn rejects_nonzero_mean() {
        let grid = Grid2D::periodic_2pi(16).unwrap();
        let omega = ScalarField::constant(grid, 1.0);
        let r = solve_p_poisson(&omega, PExponent::new(2.0).unwrap(), &PlapConfig::default());
        assert!(matches!(r, Err(Error::NonZeroMeanSource { .. })));
    }

    #[test]
    fn warm_start_is_cheaper() {
        let (psi_star, omega) = manufactured(32, 3.0);
        let mut solver = PLaplaceSolver::new(
            omega.grid,
            PExponent::new(3.0).unwrap(),
            PlapConfig::default(),
        )
        .unwrap();
        let (_, cold) = solver.solve(&omega, None).unwrap();
        let (_, warm) = solver.solve(&omega, Some(&psi_star)).unwrap();
        assert!(warm.iterations < cold.iterations);
    }

    #[test]
    fn dirichlet_grid_is_rejected() {
        let grid = Grid2D::dirichlet(8, 8, 1.0, 1.0).unwrap();
        assert!(
            PLaplaceSolver::new(grid, PExponent::new(2.0).unwrap(), PlapConfig::default()).is_err()
        );
    }

    #[test]
    fn shifted_solve_splits_off_gradient() {
        use crate::fields::perp_grad;
        use crate::pmomentum::signed_power;
        let grid = Grid2D::periodic_2pi(32).unwrap();
        let a = ScalarField::from_fn(grid, |x, y| (x + y).sin() + 0.3 * (2.0 * x).cos());
        let b = ScalarField::from_fn(grid, |x, y| x.cos() * (2.0 * y).sin());
        let w = grad(&a).axpy(1.0, &perp_grad(&b));
        let zero = ScalarField::zeros(grid);

        let mut lin =
            PLaplaceSolver::new(grid, PExponent::new(2.0).unwrap(), PlapConfig::default()).unwrap();
        let (pi, _) = lin.solve_shifted(&zero, &w, None).unwrap();
        let mut a0 = a.clone();
        a0.remove_mean();
        assert!(pi.sub(&a0).max_abs() < 1e-10);

        let q = 1.5;
        let mut nl =
            PLaplaceSolver::new(grid, PExponent::new(q).unwrap(), PlapConfig::default()).unwrap();
        let (pi, stats) = nl.solve_shifted(&zero, &w, None).unwrap();
        assert!(stats.residual <= stats.tolerance);
        let r = w.sub(&grad(&pi));
        let n = grid.len();
        let powered = VectorField2 {
            grid,
            u: (0..n).map(|k| signed_power(r.at(k), q)[0]).collect(),
            v: (0..n).map(|k| signed_power(r.at(k), q)[1]).collect(),
        };
        // The δ-regularised power is divergence-free to solver tolerance; the
        // exact power differs only where |r| is comparable to δ.
        let dv = div(&powered).l2_norm();
        assert!(dv < 1e-6, "{dv}");
        let lq = |f: &VectorField2| {
            (0..n)
                .map(|k| f.at(k)[0].hypot(f.at(k)[1]).powf(q))
                .sum::<f64>()
        };
        assert!(lq(&r) <= lq(&w));
    }
}
