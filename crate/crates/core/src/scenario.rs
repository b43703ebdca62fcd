//! Run orchestration for the command-line front end.
//!
//! Every mode writes CSV snapshots and a `summary.txt` of `key=value` lines
//! into the output directory. Output is produced on a single thread in a
//! fixed order, so identical configurations give identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use crate::ambipolar::{self, edge_jump, outflow_edges, RunResult, SolverSettings};
use crate::config::{Mode, PhysicalProblem, RunConfig};
use crate::error::{Error, Result};
use crate::field::{field_divergence_source, recover_field};
use crate::fullsystem::{quasineutrality_report, FullRunResult, FullState, FullSystem, QuasineutralityReport};
use crate::grid::ScalarField;
use crate::nondim::{compute_scales, field_to_dimensionless, to_dimensional, DimensionlessConfig, Scales};
use crate::snapshot::write_snapshot;

/// Value rendering for summary lines. Floats use the shortest round-trip
/// form with an exponent for very large or small magnitudes.
pub trait SummaryValue {
    fn render(&self) -> String;
}

impl SummaryValue for f64 {
    fn render(&self) -> String {
        format!("{self:?}")
    }
}

macro_rules! display_value {
    ($($t:ty),*) => {$(
        impl SummaryValue for $t {
            fn render(&self) -> String {
                self.to_string()
            }
        }
    )*};
}
display_value!(usize, bool, &str, String);

/// Ordered `key=value` run summary.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    entries: Vec<(String, String)>,
}

impl Summary {
    pub fn push(&mut self, key: impl Into<String>, value: impl SummaryValue) {
        self.entries.push((key.into(), value.render()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    fn report(&mut self, r: &QuasineutralityReport) {
        self.push("k_max", r.k_max);
        for (name, v) in r.ratios() {
            self.push(name, v);
        }
        self.push("neutrality_threshold", r.threshold);
        self.push("neutrality_valid", r.valid);
    }
}

struct Output {
    dir: PathBuf,
}

impl Output {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
        })
    }

    fn snapshot(&self, name: &str, field: &ScalarField, tau: f64) -> Result<()> {
        write_snapshot(field, tau, self.dir.join(format!("{name}.csv")))
    }

    fn summary(&self, s: &Summary) -> Result<()> {
        let path = self.dir.join("summary.txt");
        fs::write(&path, s.render()).map_err(|e| Error::io(path, e))
    }
}

/// Execute the configured mode and write all outputs. The summary is
/// written before a quasineutrality violation is returned as an error.
pub fn run_scenario(cfg: &RunConfig) -> Result<Summary> {
    let out = Output::new(&cfg.output_dir)?;
    let mut summary = Summary::default();
    summary.push("mode", cfg.mode.name());
    if let Some(sc) = cfg.scenario {
        summary.push("scenario", sc.name());
    }
    let verdict = match cfg.mode {
        Mode::Ambipolar => run_ambipolar(cfg, &out, &mut summary),
        Mode::Full => run_full(cfg, &out, &mut summary).map(|_| ()),
        Mode::Compare => run_compare(cfg, &out, &mut summary),
        Mode::RecoverField => run_recover(cfg, &out, &mut summary),
        Mode::CheckNeutrality => run_check(cfg, &out, &mut summary),
    };
    match verdict {
        Ok(()) => {
            out.summary(&summary)?;
            Ok(summary)
        }
        Err(e @ Error::Quasineutrality(_)) => {
            out.summary(&summary)?;
            Err(e)
        }
        Err(e) => Err(e),
    }
}

fn solve_ambipolar<F>(
    dcfg: &DimensionlessConfig,
    solver: &SolverSettings,
    tau_end: Option<f64>,
    sink: F,
) -> Result<RunResult>
where
    F: FnMut(usize, f64, &ScalarField),
{
    match tau_end {
        Some(t) => ambipolar::integrate_to(dcfg, t, solver),
        None => ambipolar::run_with(dcfg, solver, None, sink),
    }
}

fn push_run(summary: &mut Summary, prefix: &str, r: &RunResult) {
    summary.push(format!("{prefix}steps"), r.steps);
    summary.push(format!("{prefix}tau_final"), r.tau_final);
    summary.push(format!("{prefix}dt"), r.dt);
    summary.push(format!("{prefix}residual"), r.last_residual);
    summary.push(format!("{prefix}converged"), r.converged);
}

fn run_ambipolar(cfg: &RunConfig, out: &Output, summary: &mut Summary) -> Result<()> {
    let dcfg = cfg.dimensionless()?;
    summary.push("phi", dcfg.phi);
    summary.push("v1", dcfg.v1);
    summary.push("v2", dcfg.v2);
    summary.push("delta", dcfg.delta);
    summary.push("nx", dcfg.grid.nx);
    summary.push("ny", dcfg.grid.ny);
    out.snapshot("u_initial", &dcfg.initial_field()?, 0.0)?;
    let mut written = Ok(());
    let r = solve_ambipolar(&dcfg, &cfg.solver, cfg.tau_end, |step, tau, u| {
        if written.is_ok() {
            written = out.snapshot(&format!("u_step{step:09}"), u, tau);
        }
    })?;
    written?;
    out.snapshot("u_final", &r.field, r.tau_final)?;
    push_run(summary, "", &r);
    summary.push("u_min", r.field.min());
    summary.push("u_max", r.field.max());
    if dcfg.v1 != 0.0 || dcfg.v2 != 0.0 {
        let still = dcfg.with_velocity(0.0, 0.0);
        let r0 = solve_ambipolar(&still, &cfg.solver, cfg.tau_end, |_, _, _| {})?;
        out.snapshot("u_stationary", &r0.field, r0.tau_final)?;
        push_run(summary, "stationary_", &r0);
        let (dx, dy) = ambipolar::centroid_shift(&r0.field, &r.field)?;
        summary.push("centroid_shift_x", dx);
        summary.push("centroid_shift_y", dy);
        summary.push("centroid_shift_norm", dx.hypot(dy));
        let edges = outflow_edges(dcfg.v1, dcfg.v2);
        summary.push("edge_jump", edge_jump(&r.field, &edges));
        summary.push("stationary_edge_jump", edge_jump(&r0.field, &edges));
    }
    Ok(())
}

struct FullSetup {
    problem: PhysicalProblem,
    dcfg: DimensionlessConfig,
    scales: Scales,
    system: FullSystem,
    initial: FullState,
}

fn full_setup(cfg: &RunConfig) -> Result<FullSetup> {
    let problem = cfg
        .physical()
        .ok_or_else(|| Error::Config(format!("mode {} needs a [physical] section", cfg.mode.name())))?
        .clone();
    let dcfg = problem.to_dimensionless()?;
    let scales = compute_scales(&problem.params)?;
    let n0 = to_dimensional(&dcfg.initial_field()?, &scales);
    let system = FullSystem::new(problem.params, problem.velocity, cfg.full, &n0, &n0)?;
    let initial = system.initial_state(n0.clone(), n0)?;
    Ok(FullSetup {
        problem,
        dcfg,
        scales,
        system,
        initial,
    })
}

fn write_full_state(out: &Output, tag: &str, s: &FullState, scales: &Scales) -> Result<()> {
    let tau = s.time / scales.t_star;
    out.snapshot(&format!("n_e_{tag}"), &s.n_e, tau)?;
    out.snapshot(&format!("n_i_{tag}"), &s.n_i, tau)
}

/// Full run with periodic snapshots; `probe` sees each accepted state
/// together with its predecessor.
fn full_run_with<P>(cfg: &RunConfig, out: &Output, summary: &mut Summary, mut probe: P) -> Result<(FullSetup, FullRunResult)>
where
    P: FnMut(&FullState, &FullState) -> Result<()>,
{
    let setup = full_setup(cfg)?;
    let tau_end = cfg.tau_end.expect("validated: full modes carry tau_end");
    let t_end = tau_end * setup.scales.t_star;
    summary.push("t_star", setup.scales.t_star);
    summary.push("x_star", setup.scales.x_star);
    summary.push("n_inf", setup.scales.n_inf);
    summary.push("lambda", setup.problem.lambda);
    summary.push("nx", setup.dcfg.grid.nx);
    summary.push("ny", setup.dcfg.grid.ny);
    write_full_state(out, "initial", &setup.initial, &setup.scales)?;
    let every = cfg.solver.snapshot_every;
    let mut steps = 0usize;
    let mut prev = setup.initial.clone();
    let mut failure = Ok(());
    let r = setup.system.run_with(setup.initial.clone(), t_end, |s| {
        steps += 1;
        if failure.is_ok() {
            if every > 0 && steps.is_multiple_of(every) {
                failure = write_full_state(out, &format!("step{steps:09}"), s, &setup.scales);
            }
            if failure.is_ok() {
                failure = probe(s, &prev);
            }
        }
        prev = s.clone();
    })?;
    failure?;
    write_full_state(out, "final", &r.state, &setup.scales)?;
    summary.push("steps", r.steps);
    summary.push("t_final", r.state.time);
    summary.push("tau_final", r.state.time / setup.scales.t_star);
    summary.push("max_gauss_residual", r.max_gauss_residual);
    summary.push("clamped", r.state.clamped);
    summary.report(&r.report);
    Ok((setup, r))
}

fn run_full(cfg: &RunConfig, out: &Output, summary: &mut Summary) -> Result<FullRunResult> {
    full_run_with(cfg, out, summary, |_, _| Ok(())).map(|(_, r)| r)
}

fn run_compare(cfg: &RunConfig, out: &Output, summary: &mut Summary) -> Result<()> {
    let (setup, r) = full_run_with(cfg, out, summary, |_, _| Ok(()))?;
    let tau = r.state.time / setup.scales.t_star;
    let u = ambipolar::integrate_to(&setup.dcfg, tau, &cfg.solver)?.field;
    out.snapshot("u_final", &u, tau)?;
    let ne = field_to_dimensionless(&r.state.n_e, &setup.scales);
    let deviation = ne
        .values()
        .iter()
        .zip(u.values())
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    summary.push("max_deviation", deviation);
    Ok(())
}

fn run_recover(cfg: &RunConfig, out: &Output, summary: &mut Summary) -> Result<()> {
    let problem = cfg
        .physical()
        .ok_or_else(|| Error::Config("mode recover-field needs a [physical] section".into()))?;
    let dcfg = problem.to_dimensionless()?;
    let scales = compute_scales(&problem.params)?;
    let r = solve_ambipolar(&dcfg, &cfg.solver, cfg.tau_end, |_, _, _| {})?;
    push_run(summary, "", &r);
    let next = ambipolar::step(&r.field, &dcfg, r.dt)?;
    let du = next.zip_map(&r.field, |a, b| (a - b) / r.dt)?;
    let n_e = to_dimensional(&r.field, &scales);
    let dn_dt = to_dimensional(&du, &scales).map(|v| v / scales.t_star);
    let g = field_divergence_source(&n_e, &dn_dt, &problem.params, problem.velocity)?;
    let rec = recover_field(&n_e, &g, &cfg.field)?;
    let tau = r.tau_final;
    out.snapshot("n_e", &n_e, tau)?;
    out.snapshot("psi", &rec.potential, tau)?;
    out.snapshot("e_x", &rec.field.component_x(), tau)?;
    out.snapshot("e_y", &rec.field.component_y(), tau)?;
    summary.push("field_coupling", problem.params.field_coupling());
    summary.push("max_field", rec.field.max_norm());
    summary.push("field_residual", rec.residual);
    Ok(())
}

fn run_check(cfg: &RunConfig, out: &Output, summary: &mut Summary) -> Result<()> {
    let every = cfg.solver.snapshot_every.max(1);
    let threshold = cfg.full.neutrality_threshold;
    let mut checked = 0usize;
    let mut worst_k: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    let mut first_violation: Option<f64> = None;
    let mut step = 0usize;
    let (setup, r) = full_run_with(cfg, out, summary, |s, prev| {
        step += 1;
        if step.is_multiple_of(every) {
            let rep = quasineutrality_report(s, prev, threshold)?;
            checked += 1;
            worst_k = worst_k.max(rep.k_max);
            worst_ratio = worst_ratio.max(rep.max_ratio());
            if !rep.valid && first_violation.is_none() {
                first_violation = Some(s.time);
            }
        }
        Ok(())
    })?;
    worst_k = worst_k.max(r.report.k_max);
    worst_ratio = worst_ratio.max(r.report.max_ratio());
    if !r.report.valid && first_violation.is_none() {
        first_violation = Some(r.state.time);
    }
    summary.push("checks", checked + 1);
    summary.push("worst_k_max", worst_k);
    summary.push("worst_ratio", worst_ratio);
    match first_violation {
        None => Ok(()),
        Some(t) => {
            summary.push("first_violation_tau", t / setup.scales.t_star);
            Err(Error::Quasineutrality(format!(
                "first violation at tau={:e} (worst k'={worst_k:e}, worst ratio={worst_ratio:e}, threshold={threshold})",
                t / setup.scales.t_star
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn summary_renders_in_insertion_order() {
        let mut s = Summary::default();
        s.push("b", 2usize);
        s.push("a", 0.5);
        s.push("c", 3e-14);
        assert_eq!(s.render(), "b=2\na=0.5\nc=3e-14\n");
        assert_eq!(s.get("a"), Some("0.5"));
    }

    #[test]
    fn ambipolar_mode_writes_snapshots() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!(
            "[run]\nscenario = fig2\noutput = {}\n[dimensionless]\ngrid = 12\ndelta = 3\nv1 = 1\n[solver]\nsnapshot_every = 50\nsteady_tol = 1e-6\n",
            dir.path().display()
        );
        let cfg = parse_config(&text).unwrap();
        let s = run_scenario(&cfg).unwrap();
        assert_eq!(s.get("converged"), Some("true"));
        assert!(s.get("centroid_shift_x").unwrap().parse::<f64>().unwrap() > 0.0);
        for f in ["u_initial.csv", "u_final.csv", "u_stationary.csv", "summary.txt", "u_step000000050.csv"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
    }
}
