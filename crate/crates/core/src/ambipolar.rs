//! Explicit time integration of the dimensionless ambipolar equation
//!
//! ```text
//! ∂u/∂τ - ∂²u/∂ξ1² - ∂²u/∂ξ2² + v1 ∂u/∂ξ1 + v2 ∂u/∂ξ2 = φ (u - u³)
//! ```
//!
//! with fixed Dirichlet data on the four edges. The scheme is forward Euler
//! in time, the five-point Laplacian and first-order upwind advection. For
//! `dt ≤ cfl_max_dt` and data in `[0, 1]` every update is a monotone map,
//! which keeps iterates inside `[0, 1]`.

use crate::error::{Error, Result};
use crate::grid::{for_each_interior_row, laplacian_at, upwind_at, Exec, Grid2D, ScalarField};
use crate::nondim::DimensionlessConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    /// `safety · cfl_max_dt`.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub dt: TimeStep,
    pub safety: f64,
    pub steady_tol: f64,
    pub max_steps: usize,
    /// Snapshot/residual recording period in steps. Zero disables
    /// snapshots and records the residual every step on grids up to 128².
    pub snapshot_every: usize,
    pub exec: Exec,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            dt: TimeStep::Auto,
            safety: 0.8,
            steady_tol: 1e-8,
            max_steps: 10_000_000,
            snapshot_every: 0,
            exec: Exec::Auto,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(Error::param("safety", format!("must lie in (0, 1], got {}", self.safety)));
        }
        if !(self.steady_tol > 0.0) {
            return Err(Error::param("steady_tol", "must be positive"));
        }
        if let TimeStep::Fixed(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(Error::param("dt", format!("must be positive, got {dt}")));
            }
        }
        Ok(())
    }

    pub fn resolve_dt(&self, cfg: &DimensionlessConfig) -> f64 {
        match self.dt {
            TimeStep::Auto => self.safety * cfl_max_dt(cfg),
            TimeStep::Fixed(dt) => dt,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub field: ScalarField,
    pub tau_final: f64,
    pub steps: usize,
    pub dt: f64,
    pub residual_history: Vec<f64>,
    /// `max|u' - u| / dt` of the last step taken.
    pub last_residual: f64,
    pub converged: bool,
}

#[inline]
pub fn reaction(u: f64, phi: f64) -> f64 {
    phi * (u - u * u * u)
}

/// Largest stable forward-Euler step: the inverse of the diffusion,
/// advection and reaction rates, with `|d/du φ(u - u³)| ≤ 2φ` on `[0, 1]`.
pub fn cfl_max_dt(cfg: &DimensionlessConfig) -> f64 {
    let (h1, h2) = (cfg.grid.h1(), cfg.grid.h2());
    let rate = 2.0 / (h1 * h1)
        + 2.0 / (h2 * h2)
        + cfg.v1.abs() / h1
        + cfg.v2.abs() / h2
        + 2.0 * cfg.phi;
    1.0 / rate
}

/// One forward-Euler step. Boundary nodes are re-imposed from the
/// configuration.
pub fn step(u: &ScalarField, cfg: &DimensionlessConfig, dt: f64) -> Result<ScalarField> {
    step_with_source(u, cfg, dt, None, Exec::Auto)
}

/// [`step`] with an optional extra source term added to the right-hand
/// side at every interior node.
pub fn step_with_source(
    u: &ScalarField,
    cfg: &DimensionlessConfig,
    dt: f64,
    source: Option<&ScalarField>,
    exec: Exec,
) -> Result<ScalarField> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::param("dt", format!("must be positive, got {dt}")));
    }
    if u.grid() != &cfg.grid {
        return Err(Error::GridMismatch);
    }
    if let Some(s) = source {
        if s.grid() != &cfg.grid {
            return Err(Error::GridMismatch);
        }
    }
    let mut out = u.clone();
    advance(u, &mut out, cfg, dt, source, exec);
    check_finite(&out, 1)?;
    Ok(out)
}

fn check_finite(u: &ScalarField, step: usize) -> Result<()> {
    match u.first_non_finite() {
        Some((i, j)) => Err(Error::Instability { i, j, step }),
        None => Ok(()),
    }
}

/// Interior update into `out`, then Dirichlet data on the boundary.
fn advance(
    u: &ScalarField,
    out: &mut ScalarField,
    cfg: &DimensionlessConfig,
    dt: f64,
    source: Option<&ScalarField>,
    exec: Exec,
) {
    let g: Grid2D = cfg.grid;
    let nx = g.nx;
    let (h1, h2) = (g.h1(), g.h2());
    let (ih1, ih2) = (1.0 / (h1 * h1), 1.0 / (h2 * h2));
    let (v1, v2, phi) = (cfg.v1, cfg.v2, cfg.phi);
    let f = u.values();
    let src = source.map(|s| s.values());
    for_each_interior_row(exec, &g, out.values_mut(), |j, row| {
        let c = &f[j * nx..(j + 1) * nx];
        let s = &f[(j - 1) * nx..j * nx];
        let n = &f[(j + 1) * nx..(j + 2) * nx];
        for i in 1..nx - 1 {
            let mut rhs = laplacian_at(s, c, n, i, ih1, ih2) - upwind_at(s, c, n, i, v1, v2, h1, h2)
                + reaction(c[i], phi);
            if let Some(q) = src {
                rhs += q[j * nx + i];
            }
            row[i] = c[i] + dt * rhs;
        }
    });
    cfg.boundary.apply(out);
}

/// Integrate until `max|u' - u| / dt ≤ steady_tol` or `max_steps`.
pub fn run(cfg: &DimensionlessConfig, settings: &SolverSettings) -> Result<RunResult> {
    run_with(cfg, settings, None, |_, _, _| {})
}

/// [`run`] with an optional source term and a snapshot sink called as
/// `sink(step, tau, field)` every `snapshot_every` steps.
pub fn run_with<F>(
    cfg: &DimensionlessConfig,
    settings: &SolverSettings,
    source: Option<&ScalarField>,
    mut sink: F,
) -> Result<RunResult>
where
    F: FnMut(usize, f64, &ScalarField),
{
    settings.validate()?;
    cfg.validate()?;
    let mut u = initial_state(cfg)?;
    let dt = settings.resolve_dt(cfg);
    let every = history_period(settings, &cfg.grid);
    let mut next = u.clone();
    let mut history = Vec::new();
    let mut residual = f64::INFINITY;
    let mut steps = 0;
    let mut converged = false;
    while steps < settings.max_steps {
        advance(&u, &mut next, cfg, dt, source, settings.exec);
        steps += 1;
        check_finite(&next, steps)?;
        residual = u.max_abs_diff(&next)? / dt;
        std::mem::swap(&mut u, &mut next);
        if steps % every == 0 {
            history.push(residual);
        }
        if settings.snapshot_every > 0 && steps % settings.snapshot_every == 0 {
            sink(steps, steps as f64 * dt, &u);
        }
        if residual <= settings.steady_tol {
            converged = true;
            break;
        }
    }
    if history.last() != Some(&residual) && steps > 0 {
        history.push(residual);
    }
    log::debug!("ambipolar run: {steps} steps, dt={dt:e}, residual={residual:e}, converged={converged}");
    Ok(RunResult {
        field: u,
        tau_final: steps as f64 * dt,
        steps,
        dt,
        residual_history: history,
        last_residual: residual,
        converged,
    })
}

/// Integrate to exactly `tau_end` with equal steps no larger than the
/// resolved step size. Never stops early.
pub fn integrate_to(
    cfg: &DimensionlessConfig,
    tau_end: f64,
    settings: &SolverSettings,
) -> Result<RunResult> {
    settings.validate()?;
    cfg.validate()?;
    if !(tau_end.is_finite() && tau_end >= 0.0) {
        return Err(Error::param("tau_end", format!("must be non-negative, got {tau_end}")));
    }
    let mut u = initial_state(cfg)?;
    let dt_max = settings.resolve_dt(cfg);
    let n = (tau_end / dt_max).ceil().max(1.0) as usize;
    let dt = tau_end / n as f64;
    let mut next = u.clone();
    let mut residual = 0.0;
    let mut history = Vec::new();
    if tau_end > 0.0 {
        let every = history_period(settings, &cfg.grid);
        for k in 1..=n {
            advance(&u, &mut next, cfg, dt, None, settings.exec);
            check_finite(&next, k)?;
            residual = u.max_abs_diff(&next)? / dt;
            std::mem::swap(&mut u, &mut next);
            if k % every == 0 || k == n {
                history.push(residual);
            }
        }
    }
    Ok(RunResult {
        field: u,
        tau_final: tau_end,
        steps: if tau_end > 0.0 { n } else { 0 },
        dt,
        residual_history: history,
        last_residual: residual,
        converged: residual <= settings.steady_tol,
    })
}

fn initial_state(cfg: &DimensionlessConfig) -> Result<ScalarField> {
    let u = cfg.initial_field()?;
    let g = u.grid();
    if let Some(k) = u.values().iter().position(|v| *v < 0.0) {
        return Err(Error::NegativeConcentration {
            i: k % g.nx,
            j: k / g.nx,
            value: u.values()[k],
        });
    }
    Ok(u)
}

fn history_period(settings: &SolverSettings, grid: &Grid2D) -> usize {
    match settings.snapshot_every {
        0 if grid.len() <= 128 * 128 => 1,
        0 => 100,
        n => n,
    }
}

fn centroid(u: &ScalarField) -> Result<(f64, f64)> {
    let g = u.grid();
    let (mut m, mut mx, mut my) = (0.0, 0.0, 0.0);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let w = u.get(i, j);
            let (x, y) = g.position(i, j);
            m += w;
            mx += w * x;
            my += w * y;
        }
    }
    if m <= 0.0 {
        return Err(Error::Consistency("centroid of a field with no mass".into()));
    }
    Ok((mx / m, my / m))
}

/// Concentration-weighted centroid of `moving` minus that of `stationary`.
pub fn centroid_shift(stationary: &ScalarField, moving: &ScalarField) -> Result<(f64, f64)> {
    if stationary.grid() != moving.grid() {
        return Err(Error::GridMismatch);
    }
    let (a, b) = (centroid(stationary)?, centroid(moving)?);
    Ok((b.0 - a.0, b.1 - a.1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    Left,
    Right,
    Bottom,
    Top,
}

/// Edges through which the flow `(v1, v2)` leaves the domain.
pub fn outflow_edges(v1: f64, v2: f64) -> Vec<Edge> {
    let mut e = Vec::new();
    if v1 > 0.0 {
        e.push(Edge::Right);
    } else if v1 < 0.0 {
        e.push(Edge::Left);
    }
    if v2 > 0.0 {
        e.push(Edge::Top);
    } else if v2 < 0.0 {
        e.push(Edge::Bottom);
    }
    e
}

/// Largest `|u(adjacent interior) - u(boundary)|` along the given edges,
/// corners excluded.
pub fn edge_jump(u: &ScalarField, edges: &[Edge]) -> f64 {
    let g = u.grid();
    let (nx, ny) = (g.nx, g.ny);
    let mut m: f64 = 0.0;
    for e in edges {
        match e {
            Edge::Left | Edge::Right => {
                let (b, a) = if *e == Edge::Left { (0, 1) } else { (nx - 1, nx - 2) };
                for j in 1..ny - 1 {
                    m = m.max((u.get(a, j) - u.get(b, j)).abs());
                }
            }
            Edge::Bottom | Edge::Top => {
                let (b, a) = if *e == Edge::Bottom { (0, 1) } else { (ny - 1, ny - 2) };
                for i in 1..nx - 1 {
                    m = m.max((u.get(i, a) - u.get(i, b)).abs());
                }
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nondim::{Axis, BoundarySpec, InitialSpec};

    fn uniform_cfg(n: usize, delta: f64, phi: f64, v: (f64, f64), c: f64) -> DimensionlessConfig {
        DimensionlessConfig::new(
            phi,
            v,
            delta,
            (n, n),
            BoundarySpec::uniform(c),
            InitialSpec::Constant(c),
        )
        .unwrap()
    }

    #[test]
    fn reaction_values() {
        assert_eq!(reaction(1.0, 3.0), 0.0);
        assert_eq!(reaction(0.0, 3.0), 0.0);
        assert_eq!(reaction(0.5, 2.0), 0.75);
    }

    #[test]
    fn cfl_values() {
        // h = 0.1 on an 11-node side of length 1.
        let cfg = uniform_cfg(11, 1.0, 0.0, (0.0, 0.0), 1.0);
        assert!((cfl_max_dt(&cfg) - 0.0025).abs() < 1e-15);
        let with_phi = uniform_cfg(11, 1.0, 1.0, (0.0, 0.0), 1.0);
        assert!((cfl_max_dt(&with_phi) - 1.0 / 402.0).abs() < 1e-15);
        let moving = uniform_cfg(11, 1.0, 0.0, (3.0, 0.0), 1.0);
        assert!(cfl_max_dt(&moving) < cfl_max_dt(&cfg));
    }

    #[test]
    fn uniform_one_is_a_fixed_point() {
        for v in [(0.0, 0.0), (3.0, -2.0)] {
            let cfg = uniform_cfg(7, 2.0, 5.0, v, 1.0);
            let u = cfg.initial_field().unwrap();
            assert_eq!(step(&u, &cfg, 0.37).unwrap(), u);
        }
    }

    #[test]
    fn hand_step_on_3x3() {
        let cfg = uniform_cfg(3, 1.0, 1.0, (0.0, 0.0), 1.0);
        let mut u = cfg.initial_field().unwrap();
        u.set(1, 1, 0.5);
        let next = step(&u, &cfg, 0.01).unwrap();
        assert!((next.get(1, 1) - 0.58375).abs() < 1e-15);
        assert_eq!(next.get(0, 1), 1.0);
    }

    #[test]
    fn one_step_reflection_equivariance() {
        let g = Grid2D::square(9, 3.0).unwrap();
        let init = ScalarField::from_index_fn(g, |i, j| ((i * 7 + j * 3) % 5) as f64 / 5.0);
        let cfg = DimensionlessConfig::new(
            1.0,
            (2.0, -1.0),
            3.0,
            (9, 9),
            BoundarySpec::from_field(&init),
            InitialSpec::Field(init.clone()),
        )
        .unwrap();
        let refl = cfg.reflect_both().unwrap();
        let dt = cfl_max_dt(&cfg);
        let a = step(&init, &cfg, dt).unwrap();
        let b = step(&init.reflect_both(), &refl, dt).unwrap();
        assert!(a.reflect_both().max_abs_diff(&b).unwrap() <= 1e-14);
    }

    #[test]
    fn instability_is_reported_with_node() {
        let cfg = uniform_cfg(5, 1.0, 1.0, (0.0, 0.0), 1.0);
        let mut u = cfg.initial_field().unwrap();
        u.set(1, 1, f64::NAN);
        assert!(matches!(
            step(&u, &cfg, 0.001),
            Err(Error::Instability { i: 1, j: 1, .. })
        ));
    }

    #[test]
    fn run_converges_immediately_on_fixed_point() {
        let cfg = uniform_cfg(9, 4.0, 1.0, (3.0, 3.0), 1.0);
        let r = run(&cfg, &SolverSettings::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.steps, 1);
        assert_eq!(r.last_residual, 0.0);
    }

    #[test]
    fn run_rejects_negative_initial_data() {
        let g = Grid2D::square(5, 1.0).unwrap();
        let mut init = ScalarField::constant(g, 0.5);
        init.set(2, 2, -0.1);
        let cfg = DimensionlessConfig {
            phi: 1.0,
            v1: 0.0,
            v2: 0.0,
            delta: 1.0,
            grid: g,
            boundary: BoundarySpec::uniform(0.5),
            initial: InitialSpec::Field(init),
        };
        assert!(run(&cfg, &SolverSettings::default()).is_err());
    }

    #[test]
    fn non_convergence_is_not_an_error() {
        let cfg = DimensionlessConfig::new(
            1.0,
            (0.0, 0.0),
            4.0,
            (9, 9),
            BoundarySpec::uniform(0.2),
            InitialSpec::Constant(0.2),
        )
        .unwrap();
        let s = SolverSettings {
            max_steps: 5,
            ..Default::default()
        };
        let r = run(&cfg, &s).unwrap();
        assert!(!r.converged);
        assert_eq!(r.steps, 5);
        assert_eq!(r.residual_history.len(), 5);
    }

    #[test]
    fn snapshots_reach_the_sink() {
        let cfg = DimensionlessConfig::new(
            1.0,
            (1.0, 0.0),
            4.0,
            (9, 9),
            BoundarySpec::linear_ramp(&Grid2D::square(9, 4.0).unwrap(), Axis::Xi1, 0.0, 1.0),
            InitialSpec::LinearRamp {
                axis: Axis::Xi1,
                start: 0.0,
                end: 1.0,
            },
        )
        .unwrap();
        let s = SolverSettings {
            max_steps: 20,
            snapshot_every: 5,
            ..Default::default()
        };
        let mut seen = Vec::new();
        let r = run_with(&cfg, &s, None, |k, _, f| seen.push((k, f.get(4, 4)))).unwrap();
        assert_eq!(seen.iter().map(|s| s.0).collect::<Vec<_>>(), vec![5, 10, 15, 20]);
        assert_eq!(seen[3].1, r.field.get(4, 4));
    }

    #[test]
    fn integrate_to_lands_on_end_time() {
        let cfg = uniform_cfg(9, 4.0, 1.0, (0.0, 0.0), 0.5);
        let r = integrate_to(&cfg, 0.3, &SolverSettings::default()).unwrap();
        assert!((r.steps as f64 * r.dt - 0.3).abs() < 1e-12);
        assert!(r.dt <= 0.8 * cfl_max_dt(&cfg));
    }

    #[test]
    fn centroid_shift_of_translated_bump() {
        let g = Grid2D::new(12, 9, 2.2, 1.6).unwrap();
        let bump = |i: usize, j: usize| {
            if (3..=6).contains(&i) && (2..=5).contains(&j) {
                1.0 + (i * j) as f64 * 0.1
            } else {
                0.0
            }
        };
        let a = ScalarField::from_index_fn(g, bump);
        let b = ScalarField::from_index_fn(g, |i, j| if i == 0 { 0.0 } else { bump(i - 1, j) });
        let (dx, dy) = centroid_shift(&a, &b).unwrap();
        assert!((dx - g.h1()).abs() < 1e-12);
        assert!(dy.abs() < 1e-12);
        assert_eq!(centroid_shift(&a, &a).unwrap(), (0.0, 0.0));
        let other = ScalarField::constant(Grid2D::square(4, 1.0).unwrap(), 1.0);
        assert!(matches!(centroid_shift(&a, &other), Err(Error::GridMismatch)));
    }

    #[test]
    fn edge_jump_picks_outflow_edges() {
        assert_eq!(outflow_edges(3.0, 3.0), vec![Edge::Right, Edge::Top]);
        assert_eq!(outflow_edges(-1.0, 0.0), vec![Edge::Left]);
        let g = Grid2D::square(5, 1.0).unwrap();
        let f = ScalarField::from_index_fn(g, |i, _| if i == 4 { 0.0 } else { 0.75 });
        assert_eq!(edge_jump(&f, &[Edge::Right]), 0.75);
        assert_eq!(edge_jump(&f, &[Edge::Top]), 0.0);
    }

    #[test]
    fn sequential_and_parallel_runs_agree() {
        let cfg = DimensionlessConfig::new(
            1.0,
            (3.0, 1.0),
            10.0,
            (40, 40),
            BoundarySpec::uniform(0.3),
            InitialSpec::Constant(0.6),
        )
        .unwrap();
        let mk = |exec| SolverSettings {
            max_steps: 50,
            exec,
            ..Default::default()
        };
        let a = run(&cfg, &mk(Exec::Sequential)).unwrap();
        let b = run(&cfg, &mk(Exec::Parallel)).unwrap();
        assert_eq!(a.field, b.field);
    }
}
