//! Two-species drift–diffusion–Poisson reference solver.
//!
//! ```text
//! ∂N_e/∂t + v·∇N_e - D_e ΔN_e - μ_e ∇·(N_e E) = α_i N N_e - α_r N_e² N_i
//! ∂N_i/∂t + v·∇N_i - D_i ΔN_i + μ_i ∇·(N_i E) = α_i N N_e - α_r N_e² N_i
//! ∇·E = ±4πe (N_e - N_i),   E = -∇Φ,   Φ = 0 on the boundary
//! ```
//!
//! The field lives on cell faces (`E_x` between `(i, j)` and `(i+1, j)`,
//! `E_y` between `(i, j)` and `(i, j+1)`), so the discrete divergence of
//! the face field is exactly the five-point Laplacian of `Φ` and Gauss's
//! law holds to solver precision. Drift fluxes `N E` use the face average
//! of `N`. Node values of `E` reported in [`FullState::e_field`] are the
//! averages of adjacent faces.
//!
//! Concentrations are held at their initial values on the boundary. The
//! scheme is explicit, so the step is bounded by diffusion, advection,
//! drift, reaction and dielectric relaxation rates.

use std::f64::consts::PI;

use crate::ambipolar::TimeStep;
use crate::error::{Error, Result};
use crate::grid::{ensure_same_grid, laplacian_into, upwind_into, Exec, Grid2D, ScalarField, VectorField};
use crate::linalg::DirichletElliptic;
use crate::nondim::{BoundarySpec, PhysicalParams};

/// Guard against 0/0 in the quasineutrality ratios.
pub const RATIO_FLOOR: f64 = 1e-30;

/// Sign convention for Gauss's law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GaussSign {
    /// `∇·E = 4πe (N_i - N_e)`: electrons carry negative charge. Charge
    /// separation relaxes at the dielectric rate.
    #[default]
    Physical,
    /// `∇·E = 4πe (N_e - N_i)` taken literally. With electron drift
    /// `-μ_e ∇·(N_e E)` this makes charge separation grow at the
    /// dielectric rate.
    AsPrinted,
}

impl GaussSign {
    #[inline]
    fn charge(self, n_e: f64, n_i: f64) -> f64 {
        match self {
            GaussSign::Physical => n_i - n_e,
            GaussSign::AsPrinted => n_e - n_i,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullSettings {
    pub dt: TimeStep,
    /// Fraction of the stability bound used when `dt` is automatic.
    pub safety: f64,
    pub poisson_tol: f64,
    pub gauss_sign: GaussSign,
    pub neutrality_threshold: f64,
}

impl Default for FullSettings {
    fn default() -> Self {
        Self {
            dt: TimeStep::Auto,
            safety: 0.5,
            poisson_tol: 1e-10,
            gauss_sign: GaussSign::Physical,
            neutrality_threshold: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullState {
    pub n_e: ScalarField,
    pub n_i: ScalarField,
    /// Electrostatic potential Φ with `E = -∇Φ`.
    pub potential: ScalarField,
    /// Node-averaged field.
    pub e_field: VectorField,
    pub time: f64,
    /// Relative residual of the last Poisson solve.
    pub gauss_residual: f64,
    /// Nodes clamped from negative concentration to zero so far.
    pub clamped: usize,
}

/// Face-centered field components derived from a node potential.
#[derive(Debug, Clone)]
struct FaceField {
    /// `(nx-1) * ny`, indexed `j * (nx-1) + i`.
    ex: Vec<f64>,
    /// `nx * (ny-1)`, indexed `j * nx + i`.
    ey: Vec<f64>,
}

impl FaceField {
    fn from_potential(phi: &ScalarField) -> Self {
        let g = phi.grid();
        let (nx, ny) = (g.nx, g.ny);
        let (h1, h2) = (g.h1(), g.h2());
        let p = phi.values();
        let mut ex = Vec::with_capacity((nx - 1) * ny);
        for j in 0..ny {
            for i in 0..nx - 1 {
                ex.push(-(p[j * nx + i + 1] - p[j * nx + i]) / h1);
            }
        }
        let mut ey = Vec::with_capacity(nx * (ny - 1));
        for j in 0..ny - 1 {
            for i in 0..nx {
                ey.push(-(p[(j + 1) * nx + i] - p[j * nx + i]) / h2);
            }
        }
        Self { ex, ey }
    }

    fn node_average(&self, g: &Grid2D) -> VectorField {
        let (nx, ny) = (g.nx, g.ny);
        let mut ex = vec![0.0; g.len()];
        let mut ey = vec![0.0; g.len()];
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                ex[k] = match i {
                    0 => self.ex[j * (nx - 1)],
                    _ if i == nx - 1 => self.ex[j * (nx - 1) + nx - 2],
                    _ => 0.5 * (self.ex[j * (nx - 1) + i - 1] + self.ex[j * (nx - 1) + i]),
                };
                ey[k] = match j {
                    0 => self.ey[i],
                    _ if j == ny - 1 => self.ey[(ny - 2) * nx + i],
                    _ => 0.5 * (self.ey[(j - 1) * nx + i] + self.ey[j * nx + i]),
                };
            }
        }
        VectorField::new(*g, ex, ey).expect("sizes match grid")
    }

    fn max_abs(&self) -> f64 {
        self.ex.iter().chain(&self.ey).fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Interior `∇·(f E)` with `f` averaged to faces.
    fn flux_divergence(&self, f: &[f64], g: &Grid2D, out: &mut [f64]) {
        let (nx, ny) = (g.nx, g.ny);
        let (h1, h2) = (g.h1(), g.h2());
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                let k = j * nx + i;
                let east = 0.5 * (f[k] + f[k + 1]) * self.ex[j * (nx - 1) + i];
                let west = 0.5 * (f[k - 1] + f[k]) * self.ex[j * (nx - 1) + i - 1];
                let north = 0.5 * (f[k] + f[k + nx]) * self.ey[j * nx + i];
                let south = 0.5 * (f[k - nx] + f[k]) * self.ey[(j - 1) * nx + i];
                out[k] = (east - west) / h1 + (north - south) / h2;
            }
        }
    }
}

/// Potential and field from a Poisson solve.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonSolution {
    pub potential: ScalarField,
    pub field: VectorField,
    pub residual: f64,
}

/// Grounded-box Poisson solver `ΔΦ = -4πe ρ`, factored once per grid.
#[derive(Debug, Clone)]
pub struct PoissonSolver {
    op: DirichletElliptic,
    four_pi_e: f64,
    tol: f64,
}

impl PoissonSolver {
    pub fn new(grid: Grid2D, e_charge: f64, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::param("poisson_tol", "must be positive"));
        }
        Ok(Self {
            op: DirichletElliptic::laplacian(grid)?,
            four_pi_e: 4.0 * PI * e_charge,
            tol,
        })
    }

    /// Solve for charge-number density `rho` (charge `e·rho` per volume).
    pub fn solve(&self, rho: &ScalarField) -> Result<PoissonSolution> {
        ensure_same_grid(rho.grid(), self.op.grid())?;
        let rhs: Vec<f64> = rho.values().iter().map(|r| self.four_pi_e * r).collect();
        let (phi, residual) = self.op.solve(&rhs, self.tol, 8)?;
        let potential = ScalarField::new(*rho.grid(), phi)?;
        let field = FaceField::from_potential(&potential).node_average(rho.grid());
        Ok(PoissonSolution {
            potential,
            field,
            residual,
        })
    }
}

/// One-shot Poisson solve; see [`PoissonSolver`].
pub fn poisson_solve(rho: &ScalarField, e_charge: f64, tol: f64) -> Result<PoissonSolution> {
    PoissonSolver::new(*rho.grid(), e_charge, tol)?.solve(rho)
}

/// Discrete `∇·E` of the face field of `Φ` on interior nodes.
pub fn face_divergence(potential: &ScalarField) -> ScalarField {
    let g = *potential.grid();
    let faces = FaceField::from_potential(potential);
    let mut out = vec![0.0; g.len()];
    faces.flux_divergence(&vec![1.0; g.len()], &g, &mut out);
    ScalarField::new(g, out).expect("sizes match grid")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasineutralityReport {
    /// Max |k'| with `k' = (N_e - N_i) / N_e` over nodes with `N_e > 0`.
    pub k_max: f64,
    pub ratio_dt: f64,
    pub ratio_dxx: f64,
    pub ratio_dyy: f64,
    pub ratio_fx: f64,
    pub ratio_fy: f64,
    pub ratio_gx: f64,
    pub ratio_gy: f64,
    pub threshold: f64,
    pub valid: bool,
}

impl QuasineutralityReport {
    pub fn ratios(&self) -> [(&'static str, f64); 7] {
        [
            ("ratio_dt", self.ratio_dt),
            ("ratio_dxx", self.ratio_dxx),
            ("ratio_dyy", self.ratio_dyy),
            ("ratio_fx", self.ratio_fx),
            ("ratio_fy", self.ratio_fy),
            ("ratio_gx", self.ratio_gx),
            ("ratio_gy", self.ratio_gy),
        ]
    }

    pub fn max_ratio(&self) -> f64 {
        self.ratios().iter().fold(0.0, |m, r| m.max(r.1))
    }
}

/// Quasineutrality diagnostics on two consecutive states.
///
/// Each ratio is the maximum over interior nodes of
/// `|left| / (|right| + RATIO_FLOOR)` where the left side applies the
/// operator to `k' N_e = N_e - N_i` and the right side to `N_e`: the time
/// derivative, the two second derivatives, the two drift-flux divergences
/// and the two gradients. Derivatives use the stepping operators.
pub fn quasineutrality_report(
    s: &FullState,
    prev: &FullState,
    threshold: f64,
) -> Result<QuasineutralityReport> {
    let g = *s.n_e.grid();
    for f in [&s.n_i, &prev.n_e, &prev.n_i, &s.potential] {
        ensure_same_grid(&g, f.grid())?;
    }
    let (nx, ny) = (g.nx, g.ny);
    let (h1, h2) = (g.h1(), g.h2());
    let ne = s.n_e.values();
    let sep: Vec<f64> = ne.iter().zip(s.n_i.values()).map(|(a, b)| a - b).collect();
    let prev_sep: Vec<f64> = prev
        .n_e
        .values()
        .iter()
        .zip(prev.n_i.values())
        .map(|(a, b)| a - b)
        .collect();

    let k_max = ne
        .iter()
        .zip(&sep)
        .filter(|(n, _)| **n > 0.0)
        .fold(0.0_f64, |m, (n, d)| m.max((d / n).abs()));

    let faces = FaceField::from_potential(&s.potential);
    let mut flux_sep = vec![0.0; g.len()];
    let mut flux_ne = vec![0.0; g.len()];
    faces.flux_divergence(&sep, &g, &mut flux_sep);
    faces.flux_divergence(ne, &g, &mut flux_ne);
    // Split the flux divergence per axis.
    let axis_flux = |f: &[f64], i: usize, j: usize| -> (f64, f64) {
        let k = j * nx + i;
        let fx = (0.5 * (f[k] + f[k + 1]) * faces.ex[j * (nx - 1) + i]
            - 0.5 * (f[k - 1] + f[k]) * faces.ex[j * (nx - 1) + i - 1])
            / h1;
        let fy = (0.5 * (f[k] + f[k + nx]) * faces.ey[j * nx + i]
            - 0.5 * (f[k - nx] + f[k]) * faces.ey[(j - 1) * nx + i])
            / h2;
        (fx, fy)
    };

    let dt = s.time - prev.time;
    let ratio = |l: f64, r: f64| l.abs() / (r.abs() + RATIO_FLOOR);
    let mut r = [0.0_f64; 7];
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let k = j * nx + i;
            if dt > 0.0 {
                let l = (sep[k] - prev_sep[k]) / dt;
                let rr = (ne[k] - prev.n_e.values()[k]) / dt;
                r[0] = r[0].max(ratio(l, rr));
            }
            let d2x = |f: &[f64]| (f[k - 1] + f[k + 1] - 2.0 * f[k]) / (h1 * h1);
            let d2y = |f: &[f64]| (f[k - nx] + f[k + nx] - 2.0 * f[k]) / (h2 * h2);
            r[1] = r[1].max(ratio(d2x(&sep), d2x(ne)));
            r[2] = r[2].max(ratio(d2y(&sep), d2y(ne)));
            let (lsx, lsy) = axis_flux(&sep, i, j);
            let (rnx, rny) = axis_flux(ne, i, j);
            r[3] = r[3].max(ratio(lsx, rnx));
            r[4] = r[4].max(ratio(lsy, rny));
            let dx = |f: &[f64]| (f[k + 1] - f[k - 1]) / (2.0 * h1);
            let dy = |f: &[f64]| (f[k + nx] - f[k - nx]) / (2.0 * h2);
            r[5] = r[5].max(ratio(dx(&sep), dx(ne)));
            r[6] = r[6].max(ratio(dy(&sep), dy(ne)));
        }
    }
    let valid = k_max <= threshold && r.iter().all(|v| *v <= threshold);
    Ok(QuasineutralityReport {
        k_max,
        ratio_dt: r[0],
        ratio_dxx: r[1],
        ratio_dyy: r[2],
        ratio_fx: r[3],
        ratio_fy: r[4],
        ratio_gx: r[5],
        ratio_gy: r[6],
        threshold,
        valid,
    })
}

/// Configured two-species system: parameters, flow, boundary data and a
/// factored Poisson operator.
#[derive(Debug, Clone)]
pub struct FullSystem {
    pub params: PhysicalParams,
    pub velocity: (f64, f64),
    pub settings: FullSettings,
    grid: Grid2D,
    boundary_e: BoundarySpec,
    boundary_i: BoundarySpec,
    poisson: PoissonSolver,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullRunResult {
    pub state: FullState,
    pub previous: FullState,
    pub report: QuasineutralityReport,
    pub steps: usize,
    /// Largest Poisson residual over all accepted steps.
    pub max_gauss_residual: f64,
}

impl FullSystem {
    /// Boundary data for both species are taken from the initial
    /// concentrations.
    pub fn new(
        params: PhysicalParams,
        velocity: (f64, f64),
        settings: FullSettings,
        n_e: &ScalarField,
        n_i: &ScalarField,
    ) -> Result<Self> {
        params.validate()?;
        ensure_same_grid(n_e.grid(), n_i.grid())?;
        let grid = *n_e.grid();
        let poisson = PoissonSolver::new(grid, params.e_charge, settings.poisson_tol)?;
        Ok(Self {
            params,
            velocity,
            settings,
            grid,
            boundary_e: BoundarySpec::from_field(n_e),
            boundary_i: BoundarySpec::from_field(n_i),
            poisson,
        })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    fn field_from(&self, n_e: &ScalarField, n_i: &ScalarField) -> Result<PoissonSolution> {
        let sign = self.settings.gauss_sign;
        let rho = n_e.zip_map(n_i, |a, b| sign.charge(a, b))?;
        self.poisson.solve(&rho)
    }

    /// State at `time = 0` with the self-consistent field.
    pub fn initial_state(&self, n_e: ScalarField, n_i: ScalarField) -> Result<FullState> {
        ensure_same_grid(&self.grid, n_e.grid())?;
        ensure_same_grid(&self.grid, n_i.grid())?;
        for f in [&n_e, &n_i] {
            if let Some(k) = f.values().iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::NegativeConcentration {
                    i: k % self.grid.nx,
                    j: k / self.grid.nx,
                    value: f.values()[k],
                });
            }
        }
        let sol = self.field_from(&n_e, &n_i)?;
        Ok(FullState {
            n_e,
            n_i,
            potential: sol.potential,
            e_field: sol.field,
            time: 0.0,
            gauss_residual: sol.residual,
            clamped: 0,
        })
    }

    /// Explicit stability bound for the state, before the safety factor.
    pub fn stable_dt(&self, s: &FullState) -> f64 {
        let p = &self.params;
        let g = &self.grid;
        let (h1, h2) = (g.h1(), g.h2());
        let e_max = FaceField::from_potential(&s.potential).max_abs();
        let ne_max = s.n_e.max();
        let ni_max = s.n_i.max();
        let n_max = ne_max.max(ni_max);
        let reaction = p.alpha_i * p.n_neutral + 3.0 * p.alpha_r * n_max * n_max;
        let dielectric = 4.0 * PI * p.e_charge * (p.mu_e * ne_max + p.mu_i * ni_max);
        let adv = self.velocity.0.abs() / h1 + self.velocity.1.abs() / h2;
        let rate = |d: f64, mu: f64| {
            2.0 * d / (h1 * h1) + 2.0 * d / (h2 * h2) + adv + mu * e_max * (1.0 / h1 + 1.0 / h2)
        };
        let worst = rate(p.d_e, p.mu_e).max(rate(p.d_i, p.mu_i)) + reaction + dielectric;
        1.0 / worst
    }

    /// One forward-Euler step of both species followed by a Poisson
    /// re-solve.
    pub fn step(&self, s: &FullState, dt: f64) -> Result<FullState> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::param("dt", format!("must be positive, got {dt}")));
        }
        let g = self.grid;
        let n = g.len();
        let p = &self.params;
        let (vx, vy) = self.velocity;
        let faces = FaceField::from_potential(&s.potential);
        let ne = s.n_e.values();
        let ni = s.n_i.values();

        let mut lap_e = vec![0.0; n];
        let mut lap_i = vec![0.0; n];
        let mut adv_e = vec![0.0; n];
        let mut adv_i = vec![0.0; n];
        let mut drift_e = vec![0.0; n];
        let mut drift_i = vec![0.0; n];
        laplacian_into(Exec::Sequential, &g, ne, &mut lap_e);
        laplacian_into(Exec::Sequential, &g, ni, &mut lap_i);
        upwind_into(Exec::Sequential, &g, ne, vx, vy, &mut adv_e);
        upwind_into(Exec::Sequential, &g, ni, vx, vy, &mut adv_i);
        faces.flux_divergence(ne, &g, &mut drift_e);
        faces.flux_divergence(ni, &g, &mut drift_i);

        let mut new_e = s.n_e.clone();
        let mut new_i = s.n_i.clone();
        let mut clamped = s.clamped;
        {
            let (oe, oi) = (new_e.values_mut(), new_i.values_mut());
            for (i, j) in g.interior() {
                let k = g.idx(i, j);
                let r = p.production(ne[k], ni[k]);
                let mut e = ne[k] + dt * (p.d_e * lap_e[k] - adv_e[k] + p.mu_e * drift_e[k] + r);
                let mut q = ni[k] + dt * (p.d_i * lap_i[k] - adv_i[k] - p.mu_i * drift_i[k] + r);
                if !e.is_finite() || !q.is_finite() {
                    return Err(Error::Instability { i, j, step: 0 });
                }
                if e < 0.0 {
                    e = 0.0;
                    clamped += 1;
                }
                if q < 0.0 {
                    q = 0.0;
                    clamped += 1;
                }
                oe[k] = e;
                oi[k] = q;
            }
        }
        self.boundary_e.apply(&mut new_e);
        self.boundary_i.apply(&mut new_i);
        if clamped > s.clamped {
            log::warn!("clamped {} negative concentrations at t={:e}", clamped - s.clamped, s.time + dt);
        }
        let sol = self.field_from(&new_e, &new_i)?;
        Ok(FullState {
            n_e: new_e,
            n_i: new_i,
            potential: sol.potential,
            e_field: sol.field,
            time: s.time + dt,
            gauss_residual: sol.residual,
            clamped,
        })
    }

    /// Integrate to `t_end` and report quasineutrality on the last two
    /// states. `on_step` sees every accepted state.
    pub fn run_with<F>(&self, initial: FullState, t_end: f64, mut on_step: F) -> Result<FullRunResult>
    where
        F: FnMut(&FullState),
    {
        if !(t_end.is_finite() && t_end > initial.time) {
            return Err(Error::param("t_end", format!("must exceed the initial time, got {t_end}")));
        }
        let fixed = match self.settings.dt {
            TimeStep::Fixed(dt) if dt.is_finite() && dt > 0.0 => {
                let n = ((t_end - initial.time) / dt).ceil().max(1.0);
                Some((t_end - initial.time) / n)
            }
            TimeStep::Fixed(dt) => return Err(Error::param("dt", format!("must be positive, got {dt}"))),
            TimeStep::Auto => None,
        };
        let mut prev = initial.clone();
        let mut cur = initial;
        let mut steps = 0;
        let mut max_gauss: f64 = cur.gauss_residual;
        while cur.time < t_end {
            let remaining = t_end - cur.time;
            let dt = match fixed {
                Some(dt) => dt.min(remaining),
                None => (self.settings.safety * self.stable_dt(&cur)).min(remaining),
            };
            if remaining <= 1e-12 * t_end.abs() {
                break;
            }
            let next = self.step(&cur, dt).map_err(|e| match e {
                Error::Instability { i, j, .. } => Error::Instability { i, j, step: steps + 1 },
                other => other,
            })?;
            steps += 1;
            max_gauss = max_gauss.max(next.gauss_residual);
            on_step(&next);
            prev = std::mem::replace(&mut cur, next);
        }
        let report = quasineutrality_report(&cur, &prev, self.settings.neutrality_threshold)?;
        log::debug!("full run: {steps} steps to t={:e}, k_max={:e}", cur.time, report.k_max);
        Ok(FullRunResult {
            state: cur,
            previous: prev,
            report,
            steps,
            max_gauss_residual: max_gauss,
        })
    }

    pub fn run(&self, initial: FullState, t_end: f64) -> Result<FullRunResult> {
        self.run_with(initial, t_end, |_| {})
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nondim::{BOLTZMANN_CGS, ELEMENTARY_CHARGE_ESU};

    fn params() -> PhysicalParams {
        PhysicalParams {
            d_e: 1.0,
            d_i: 1.0,
            mu_e: 1.0,
            mu_i: 1.0,
            alpha_i: 1.0,
            alpha_r: 1.0,
            n_neutral: 1.0,
            e_charge: ELEMENTARY_CHARGE_ESU,
            temperature: ELEMENTARY_CHARGE_ESU / BOLTZMANN_CGS,
        }
    }

    #[test]
    fn neutral_charge_gives_zero_field() {
        let g = Grid2D::square(9, 1.0).unwrap();
        let sol = poisson_solve(&ScalarField::zeros(g), 1.0, 1e-10).unwrap();
        assert_eq!(sol.field.max_norm(), 0.0);
    }

    #[test]
    fn sine_mode_matches_discrete_and_continuous_solutions() {
        let n = 33;
        let g = Grid2D::square(n, 1.0).unwrap();
        let rho = ScalarField::from_fn(g, |x, y| (PI * x).sin() * (PI * y).sin());
        let e = 0.3;
        let sol = poisson_solve(&rho, e, 1e-12).unwrap();
        let h = g.h1();
        let lam_h = 2.0 * 4.0 / (h * h) * (PI * h / 2.0).sin().powi(2);
        let lam = 2.0 * PI * PI;
        let four_pi_e = 4.0 * PI * e;
        for (i, j) in g.interior() {
            let exact_discrete = four_pi_e * rho.get(i, j) / lam_h;
            let exact = four_pi_e * rho.get(i, j) / lam;
            assert!((sol.potential.get(i, j) - exact_discrete).abs() < 1e-12);
            assert!((sol.potential.get(i, j) - exact).abs() < 2e-3 * four_pi_e / lam);
        }
        let div = face_divergence(&sol.potential);
        for (i, j) in g.interior() {
            assert!((div.get(i, j) - four_pi_e * rho.get(i, j)).abs() <= 1e-12 * (1.0 + four_pi_e));
        }
    }

    fn system(p: PhysicalParams, ne: &ScalarField, ni: &ScalarField) -> FullSystem {
        FullSystem::new(p, (0.0, 0.0), FullSettings::default(), ne, ni).unwrap()
    }

    #[test]
    fn uniform_equilibrium_is_fixed() {
        let p = params();
        let g = Grid2D::square(7, 1.0).unwrap();
        let n = ScalarField::constant(g, p.n_inf());
        let sys = system(p, &n, &n);
        let s0 = sys.initial_state(n.clone(), n.clone()).unwrap();
        let s1 = sys.step(&s0, 1e-3).unwrap();
        assert!(s1.n_e.max_abs_diff(&n).unwrap() <= 1e-15);
        assert_eq!(s1.e_field.max_norm(), 0.0);
    }

    #[test]
    fn symmetric_species_stay_neutral() {
        let p = params();
        let g = Grid2D::square(9, 2.0).unwrap();
        let n = ScalarField::from_fn(g, |x, y| 0.3 + 0.2 * x + 0.1 * y * y);
        let sys = system(p, &n, &n);
        let mut s = sys.initial_state(n.clone(), n).unwrap();
        for _ in 0..20 {
            let dt = 0.5 * sys.stable_dt(&s);
            s = sys.step(&s, dt).unwrap();
        }
        assert_eq!(s.n_e, s.n_i);
        assert_eq!(s.e_field.max_norm(), 0.0);
    }

    #[test]
    fn electron_update_hand_value_on_3x3() {
        // 3x3 grid, h = 1, one interior node. n_e = 1 everywhere except the
        // center (2); n_i ≡ 1, so ρ = n_i - n_e = -1 at the center.
        // Poisson: 4Φ_c / h² = 4πe ρ_c → Φ_c = -πe. Faces around the center:
        // E = -∇Φ points inward with magnitude |Φ_c| = πe; the outward
        // normal component on all four faces is -πe.
        // Drift divergence ∇·(n E) at the center: 4 faces × face n (1.5)
        // × (-πe) → -6πe. Laplacian: 4·1 - 4·2 = -4. Production:
        // 1·1·2 - 1·4·1 = -2. Update: 2 + dt(D_e(-4) + μ_e(-6πe) - 2).
        let e = 0.01;
        let p = PhysicalParams {
            d_e: 0.5,
            mu_e: 0.25,
            e_charge: e,
            ..params()
        };
        let g = Grid2D::square(3, 2.0).unwrap();
        let mut ne = ScalarField::constant(g, 1.0);
        ne.set(1, 1, 2.0);
        let ni = ScalarField::constant(g, 1.0);
        let sys = system(p, &ne, &ni);
        let s0 = sys.initial_state(ne, ni).unwrap();
        assert!((s0.potential.get(1, 1) + PI * e).abs() < 1e-15);
        let dt = 1e-2;
        let s1 = sys.step(&s0, dt).unwrap();
        let expected = 2.0 + dt * (0.5 * -4.0 + 0.25 * (-6.0 * PI * e) - 2.0);
        assert!((s1.n_e.get(1, 1) - expected).abs() < 1e-14, "{} vs {expected}", s1.n_e.get(1, 1));
    }

    #[test]
    fn gauss_law_holds_after_each_step() {
        let p = PhysicalParams {
            d_e: 2.0,
            mu_e: 2.0,
            e_charge: 50.0,
            ..params()
        };
        let g = Grid2D::square(12, 1.0).unwrap();
        let ne = ScalarField::from_fn(g, |x, y| 0.5 + 0.3 * x * y);
        let sys = system(p, &ne, &ne);
        let mut s = sys.initial_state(ne.clone(), ne).unwrap();
        let four_pi_e = 4.0 * PI * p.e_charge;
        for _ in 0..10 {
            s = sys.step(&s, 0.5 * sys.stable_dt(&s)).unwrap();
            let div = face_divergence(&s.potential);
            let mut worst: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for (i, j) in g.interior() {
                let rho = s.n_i.get(i, j) - s.n_e.get(i, j);
                worst = worst.max((div.get(i, j) - four_pi_e * rho).abs());
                scale = scale.max(four_pi_e * rho.abs());
            }
            assert!(worst <= 1e-10 * (1.0 + scale));
        }
    }

    #[test]
    fn report_on_exact_neutrality() {
        let p = params();
        let g = Grid2D::square(6, 1.0).unwrap();
        let n = ScalarField::from_fn(g, |x, y| 1.0 + x + y);
        let sys = system(p, &n, &n);
        let s0 = sys.initial_state(n.clone(), n.clone()).unwrap();
        let s1 = sys.step(&s0, 1e-3).unwrap();
        let r = quasineutrality_report(&s1, &s0, 0.1).unwrap();
        assert_eq!(r.k_max, 0.0);
        assert_eq!(r.max_ratio(), 0.0);
        assert!(r.valid);
    }

    #[test]
    fn report_on_half_ion_density() {
        let p = params();
        let g = Grid2D::square(6, 1.0).unwrap();
        let ne = ScalarField::from_fn(g, |x, y| 1.0 + x + y);
        let ni = ne.map(|v| 0.5 * v);
        let sys = system(p, &ne, &ni);
        let s = sys.initial_state(ne, ni).unwrap();
        let r = quasineutrality_report(&s, &s, 0.1).unwrap();
        assert!((r.k_max - 0.5).abs() < 1e-15);
        assert!(!r.valid);
        // k' is uniform, so every spatial ratio is exactly 0.5.
        assert!((r.ratio_gx - 0.5).abs() < 1e-12);
        assert_eq!(r.ratio_dt, 0.0);
    }

    #[test]
    fn report_hand_ratios_on_4x4() {
        // h = 1. n_e = 1 + x² (second x-derivative 2, x-gradient 2x),
        // n_e - n_i = 0.01 x³ (second x-derivative 0.06x, gradient
        // (0.01((x+1)³-(x-1)³))/2 = 0.03x² + 0.01). Interior x ∈ {1, 2}:
        //   dxx: 0.06/2 = 0.03 and 0.12/2 = 0.06 → 0.06
        //   gx:  0.04/2 = 0.02 and 0.13/4 = 0.0325 → 0.0325
        // No y-variation: y-ratios are 0 (0 / floor).
        let p = params();
        let g = Grid2D::square(4, 3.0).unwrap();
        let ne = ScalarField::from_fn(g, |x, _| 1.0 + x * x);
        let ni = ScalarField::from_fn(g, |x, _| 1.0 + x * x - 0.01 * x * x * x);
        let sys = system(PhysicalParams { e_charge: 1e-30, ..p }, &ne, &ni);
        let s = sys.initial_state(ne, ni).unwrap();
        let r = quasineutrality_report(&s, &s, 0.1).unwrap();
        assert!((r.ratio_dxx - 0.06).abs() < 1e-12, "{}", r.ratio_dxx);
        assert!((r.ratio_gx - 0.0325).abs() < 1e-12, "{}", r.ratio_gx);
        assert_eq!(r.ratio_dyy, 0.0);
        assert_eq!(r.ratio_gy, 0.0);
    }

    #[test]
    fn printed_sign_amplifies_charge_separation() {
        let p = PhysicalParams {
            d_e: 2.0,
            mu_e: 2.0,
            e_charge: 20.0,
            ..params()
        };
        let g = Grid2D::square(10, 1.0).unwrap();
        let ne = ScalarField::from_fn(g, |x, y| 0.5 + 0.2 * (3.0 * x).sin() * y);
        let ni = ScalarField::from_fn(g, |x, y| 0.5 + 0.2 * (3.0 * x).sin() * y * 0.99);
        let sep = |s: &FullState| s.n_e.max_abs_diff(&s.n_i).unwrap();
        let mut results = Vec::new();
        for sign in [GaussSign::Physical, GaussSign::AsPrinted] {
            let settings = FullSettings {
                gauss_sign: sign,
                ..Default::default()
            };
            let sys = FullSystem::new(p, (0.0, 0.0), settings, &ne, &ni).unwrap();
            let mut s = sys.initial_state(ne.clone(), ni.clone()).unwrap();
            let dt = 0.2 * sys.stable_dt(&s);
            for _ in 0..50 {
                s = sys.step(&s, dt).unwrap();
            }
            results.push(sep(&s));
        }
        assert!(results[0] < results[1], "{results:?}");
    }
}
