//! Run configuration: an INI-style document with `key = value` lines under
//! `[section]` headers.
//!
//! ```text
//! [run]
//! mode = ambipolar            # ambipolar | full | compare | recover-field | check-neutrality
//! scenario = fig1             # optional preset: fig1 | fig2
//! output = out
//!
//! [dimensionless]             # either this section ...
//! phi = 1
//! v1 = 3
//! v2 = 3
//! delta = 10
//! grid = 64                   # or 64x48
//! boundary = 1.0              # number | ramp | from-initial
//! initial = 0.5               # number (flat interior) | ramp | file:PATH
//! ramp_axis = xi1             # xi1 | xi2 | both
//! ramp_start = 0
//! ramp_end = 1
//!
//! [physical]                  # ... or this one, in cgs units
//! d_e = 2.0e5
//! d_i = 1.0e2
//! mu_e, mu_i                  # optional, Einstein relation when absent
//! einstein_tol = 1e-6         # relative check on given mobilities | off
//! alpha_i, alpha_r, n_neutral, temperature
//! e_charge                    # default elementary charge
//! v_x, v_y, lambda, grid, boundary, initial, ramp_axis, ramp_start, ramp_end
//!
//! [solver]
//! dt = auto                   # auto | number
//! safety = 0.8
//! steady_tol = 1e-8
//! max_steps = 10000000
//! snapshot_every = 0
//! tau_end = 0.3               # fixed horizon; steady-state run when absent
//! exec = auto                 # auto | sequential | parallel
//!
//! [full]
//! gauss_sign = physical       # physical | as-printed
//! poisson_tol = 1e-10
//! safety = 0.5
//! dt = auto
//! threshold = 0.1
//!
//! [field]
//! elliptic_tol = 1e-10
//! max_iter = 100000
//! ```
//!
//! `#` and `;` start comments. Unknown sections and keys are errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::ambipolar::{SolverSettings, TimeStep};
use crate::error::{Error, Result};
use crate::field::FieldRecoverySettings;
use crate::fullsystem::{FullSettings, GaussSign};
use crate::grid::{Exec, Grid2D};
use crate::nondim::{
    mobility_from_diffusivity, Axis, BoundarySpec, DimensionlessConfig, InitialSpec,
    PhysicalParams, ELEMENTARY_CHARGE_ESU,
};
use crate::snapshot;

const SCHEMA: &[(&str, &[&str])] = &[
    ("run", &["mode", "scenario", "output"]),
    (
        "dimensionless",
        &[
            "phi", "v1", "v2", "delta", "grid", "boundary", "initial", "ramp_axis", "ramp_start",
            "ramp_end",
        ],
    ),
    (
        "physical",
        &[
            "d_e", "d_i", "mu_e", "mu_i", "alpha_i", "alpha_r", "n_neutral", "e_charge",
            "temperature", "v_x", "v_y", "lambda", "grid", "boundary", "initial", "ramp_axis",
            "ramp_start", "ramp_end", "einstein_tol",
        ],
    ),
    (
        "solver",
        &["dt", "safety", "steady_tol", "max_steps", "snapshot_every", "tau_end", "exec"],
    ),
    ("full", &["gauss_sign", "poisson_tol", "safety", "dt", "threshold"]),
    ("field", &["elliptic_tol", "max_iter"]),
];

/// Default φ, δ and node count of the fig1 and fig2 presets.
pub const PRESET_PHI: f64 = 1.0;
pub const PRESET_DELTA: f64 = 10.0;
pub const PRESET_GRID: usize = 64;
/// Values of the fig1 ramp at ξ1 = 0 and ξ1 = δ.
pub const FIG1_RAMP: (f64, f64) = (1.0, 0.0);
/// Flat interior level of the fig2 preset.
pub const FIG2_LEVEL: f64 = 0.5;
/// Boundary value of the fig2 preset.
pub const FIG2_BOUNDARY: f64 = 0.8;
/// Relative tolerance on `D/μ = kT/e` when mobilities are given explicitly.
pub const DEFAULT_EINSTEIN_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Ambipolar,
    Full,
    Compare,
    RecoverField,
    CheckNeutrality,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::Ambipolar,
        Mode::Full,
        Mode::Compare,
        Mode::RecoverField,
        Mode::CheckNeutrality,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Ambipolar => "ambipolar",
            Mode::Full => "full",
            Mode::Compare => "compare",
            Mode::RecoverField => "recover-field",
            Mode::CheckNeutrality => "check-neutrality",
        }
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mode {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Linear ramp along ξ1 falling from 1 to 0, on the boundary and in the
    /// interior.
    Fig1,
    /// Flat interior below a uniform boundary value.
    Fig2,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Fig1 => "fig1",
            Scenario::Fig2 => "fig2",
        }
    }

    fn defaults(self) -> Vec<(&'static str, String)> {
        let mut d = vec![
            ("phi", PRESET_PHI.to_string()),
            ("v1", "0".into()),
            ("v2", "0".into()),
            ("delta", PRESET_DELTA.to_string()),
            ("grid", PRESET_GRID.to_string()),
        ];
        match self {
            Scenario::Fig1 => {
                d.push(("boundary", "ramp".into()));
                d.push(("initial", "ramp".into()));
                d.push(("ramp_axis", "xi1".into()));
                d.push(("ramp_start", FIG1_RAMP.0.to_string()));
                d.push(("ramp_end", FIG1_RAMP.1.to_string()));
            }
            Scenario::Fig2 => {
                d.push(("boundary", FIG2_BOUNDARY.to_string()));
                d.push(("initial", FIG2_LEVEL.to_string()));
            }
        }
        d
    }
}

impl FromStr for Scenario {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "fig1" => Ok(Scenario::Fig1),
            "fig2" => Ok(Scenario::Fig2),
            _ => Err(format!("unknown scenario {s:?}")),
        }
    }
}

/// Dimensional problem description.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalProblem {
    pub params: PhysicalParams,
    /// Macroscopic velocity in cm/s.
    pub velocity: (f64, f64),
    /// Domain side length in cm.
    pub lambda: f64,
    /// Node counts; extents are set on conversion.
    pub grid: Grid2D,
    /// Concentrations in cm⁻³.
    pub boundary: BoundarySpec,
    pub initial: InitialSpec,
}

impl PhysicalProblem {
    pub fn to_dimensionless(&self) -> Result<DimensionlessConfig> {
        crate::nondim::to_dimensionless(
            &self.params,
            self.velocity,
            self.lambda,
            &self.grid,
            &self.boundary,
            &self.initial,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamSource {
    Physical(PhysicalProblem),
    Dimensionless(DimensionlessConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub scenario: Option<Scenario>,
    pub source: ParamSource,
    pub solver: SolverSettings,
    /// Dimensionless end time; `None` runs the ambipolar solver to steady
    /// state.
    pub tau_end: Option<f64>,
    pub full: FullSettings,
    pub field: FieldRecoverySettings,
    pub output_dir: PathBuf,
}

impl RunConfig {
    /// The dimensionless problem, converting a physical source.
    pub fn dimensionless(&self) -> Result<DimensionlessConfig> {
        match &self.source {
            ParamSource::Dimensionless(c) => Ok(c.clone()),
            ParamSource::Physical(p) => p.to_dimensionless(),
        }
    }

    pub fn physical(&self) -> Option<&PhysicalProblem> {
        match &self.source {
            ParamSource::Physical(p) => Some(p),
            ParamSource::Dimensionless(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    /// Source line, `None` for command-line overrides.
    line: Option<usize>,
}

/// Parsed but unvalidated document.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
}

fn known_keys(section: &str) -> Option<&'static [&'static str]> {
    SCHEMA.iter().find(|(s, _)| *s == section).map(|(_, k)| *k)
}

fn strip_comment(line: &str) -> &str {
    let cut = line
        .char_indices()
        .find(|&(i, c)| {
            (c == '#' || c == ';')
                && (i == 0 || line[..i].ends_with(char::is_whitespace))
        })
        .map(|(i, _)| i)
        .unwrap_or(line.len());
    line[..cut].trim()
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        let mut current: Option<String> = None;
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            let syntax = |message: String| Error::ConfigSyntax {
                line: line_no,
                message,
            };
            let body = strip_comment(line);
            if body.is_empty() {
                continue;
            }
            if let Some(rest) = body.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| syntax(format!("unterminated section header {body:?}")))?
                    .trim();
                if known_keys(name).is_none() {
                    return Err(syntax(format!("unknown section [{name}]")));
                }
                if raw.sections.contains_key(name) {
                    return Err(syntax(format!("duplicate section [{name}]")));
                }
                raw.sections.insert(name.to_string(), BTreeMap::new());
                current = Some(name.to_string());
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| syntax(format!("expected `key = value`, found {body:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let section = current
                .as_deref()
                .ok_or_else(|| syntax(format!("key `{key}` outside any section")))?;
            if !known_keys(section).is_some_and(|k| k.contains(&key)) {
                return Err(syntax(format!("unknown key `{key}` in [{section}]")));
            }
            if value.is_empty() {
                return Err(syntax(format!("empty value for `{section}.{key}`")));
            }
            let entries = raw.sections.get_mut(section).expect("section inserted");
            if entries.contains_key(key) {
                return Err(syntax(format!("duplicate key `{section}.{key}`")));
            }
            entries.insert(
                key.to_string(),
                Entry {
                    value: value.to_string(),
                    line: Some(line_no),
                },
            );
        }
        Ok(raw)
    }

    /// Apply a `section.key=value` override, creating the section if
    /// needed.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let bad = |m: String| Error::Config(format!("--set {assignment:?}: {m}"));
        let (path, value) = assignment
            .split_once('=')
            .ok_or_else(|| bad("expected section.key=value".into()))?;
        let (section, key) = path
            .trim()
            .split_once('.')
            .ok_or_else(|| bad("expected section.key=value".into()))?;
        let keys = known_keys(section).ok_or_else(|| bad(format!("unknown section [{section}]")))?;
        if !keys.contains(&key) {
            return Err(bad(format!("unknown key `{key}` in [{section}]")));
        }
        let value = value.trim();
        if value.is_empty() {
            return Err(bad("empty value".into()));
        }
        self.sections.entry(section.to_string()).or_default().insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                line: None,
            },
        );
        Ok(())
    }

    fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.sections.get(section).and_then(|s| s.get(key))
    }

    fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    /// Expand presets and validate. Relative file paths resolve against
    /// `base_dir`.
    pub fn resolve(mut self, base_dir: Option<&Path>) -> Result<RunConfig> {
        let r = Reader {
            raw: &self,
            base: base_dir,
        };
        let mode: Mode = r.parsed("run", "mode")?.unwrap_or(Mode::Ambipolar);
        let scenario: Option<Scenario> = r.parsed("run", "scenario")?;
        let output_dir = r
            .string("run", "output")
            .map(|s| r.path(s))
            .unwrap_or_else(|| PathBuf::from("out"));

        if let Some(sc) = scenario {
            if self.has_section("physical") {
                return Err(Error::Config(format!(
                    "exactly one parameter source: scenario {} supplies [dimensionless], remove [physical]",
                    sc.name()
                )));
            }
            let sec = self.sections.entry("dimensionless".into()).or_default();
            for (k, v) in sc.defaults() {
                sec.entry(k.to_string()).or_insert(Entry { value: v, line: None });
            }
        }
        let r = Reader {
            raw: &self,
            base: base_dir,
        };
        let source = match (r.raw.has_section("physical"), r.raw.has_section("dimensionless")) {
            (true, true) => {
                return Err(Error::Config(
                    "exactly one parameter source: both [physical] and [dimensionless] present".into(),
                ))
            }
            (false, false) => {
                return Err(Error::Config(
                    "missing section: one of [physical] or [dimensionless] is required".into(),
                ))
            }
            (true, false) => ParamSource::Physical(r.physical()?),
            (false, true) => ParamSource::Dimensionless(r.dimensionless()?),
        };
        if mode != Mode::Ambipolar && matches!(source, ParamSource::Dimensionless(_)) {
            return Err(Error::Config(format!(
                "mode {} needs physical parameters: provide a [physical] section",
                mode.name()
            )));
        }

        let solver = r.solver()?;
        let tau_end: Option<f64> = r.number("solver", "tau_end")?;
        if let Some(t) = tau_end {
            if !(t.is_finite() && t > 0.0) {
                return Err(r.invalid("solver", "tau_end", "must be positive"));
            }
        }
        if matches!(mode, Mode::Full | Mode::Compare | Mode::CheckNeutrality) && tau_end.is_none() {
            return Err(Error::Config(format!(
                "mode {} needs solver.tau_end",
                mode.name()
            )));
        }
        let full = r.full()?;
        let field = FieldRecoverySettings {
            elliptic_tol: r.number("field", "elliptic_tol")?.unwrap_or(1e-10),
            max_iter: r.number("field", "max_iter")?.unwrap_or(100_000),
        };
        if !(field.elliptic_tol > 0.0) || field.max_iter == 0 {
            return Err(r.invalid("field", "elliptic_tol", "tolerance and max_iter must be positive"));
        }
        Ok(RunConfig {
            mode,
            scenario,
            source,
            solver,
            tau_end,
            full,
            field,
            output_dir,
        })
    }
}

/// Parse and validate a configuration document without overrides.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    RawConfig::parse(text)?.resolve(None)
}

struct Reader<'a> {
    raw: &'a RawConfig,
    base: Option<&'a Path>,
}

impl Reader<'_> {
    fn where_(&self, section: &str, key: &str) -> String {
        match self.raw.get(section, key).and_then(|e| e.line) {
            Some(l) => format!("line {l}: {section}.{key}"),
            None => format!("{section}.{key}"),
        }
    }

    fn invalid(&self, section: &str, key: &str, msg: impl std::fmt::Display) -> Error {
        Error::Config(format!("{}: {msg}", self.where_(section, key)))
    }

    fn string(&self, section: &str, key: &str) -> Option<&str> {
        self.raw.get(section, key).map(|e| e.value.as_str())
    }

    fn parsed<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.string(section, key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| self.invalid(section, key, format!("{e} ({v:?})"))),
        }
    }

    fn number<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.parsed(section, key)
    }

    fn required<T: FromStr>(&self, section: &str, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.parsed(section, key)?
            .ok_or_else(|| Error::Config(format!("missing key {section}.{key}")))
    }

    fn path(&self, s: &str) -> PathBuf {
        let p = PathBuf::from(s);
        match self.base {
            Some(b) if p.is_relative() => b.join(p),
            _ => p,
        }
    }

    fn grid_counts(&self, section: &str) -> Result<(usize, usize)> {
        let v: String = self.required(section, "grid")?;
        let parse = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| self.invalid(section, "grid", format!("{e} ({v:?})")))
        };
        match v.split_once('x') {
            Some((a, b)) => Ok((parse(a)?, parse(b)?)),
            None => {
                let n = parse(&v)?;
                Ok((n, n))
            }
        }
    }

    fn axis(&self, section: &str) -> Result<Axis> {
        match self.string(section, "ramp_axis").unwrap_or("xi1") {
            "xi1" | "x" => Ok(Axis::Xi1),
            "xi2" | "y" => Ok(Axis::Xi2),
            "both" => Ok(Axis::Both),
            other => Err(self.invalid(section, "ramp_axis", format!("expected xi1, xi2 or both, got {other:?}"))),
        }
    }

    /// Boundary and initial data on `grid`, values in the section's units.
    fn data(&self, section: &str, grid: &Grid2D) -> Result<(BoundarySpec, InitialSpec)> {
        let axis = self.axis(section)?;
        let start: f64 = self.number(section, "ramp_start")?.unwrap_or(0.0);
        let end: f64 = self.number(section, "ramp_end")?.unwrap_or(1.0);
        let initial_text = self.string(section, "initial");
        let initial = match initial_text {
            None => None,
            Some("ramp") => Some(InitialSpec::LinearRamp { axis, start, end }),
            Some(s) if s.starts_with("file:") => Some(InitialSpec::FromFile(self.path(&s[5..]))),
            Some(s) => Some(InitialSpec::Constant(s.parse::<f64>().map_err(|e| {
                self.invalid(section, "initial", format!("{e}: expected a number, `ramp` or `file:PATH`"))
            })?)),
        };
        let boundary_text: String = self.required(section, "boundary")?;
        let boundary = match boundary_text.as_str() {
            "ramp" => BoundarySpec::linear_ramp(grid, axis, start, end),
            "from-initial" => {
                let Some(InitialSpec::FromFile(p)) = &initial else {
                    return Err(self.invalid(section, "boundary", "from-initial needs initial = file:PATH"));
                };
                BoundarySpec::from_field(&snapshot::read_snapshot(p)?.into_field(*grid)?)
            }
            s => BoundarySpec::uniform(s.parse::<f64>().map_err(|e| {
                self.invalid(section, "boundary", format!("{e}: expected a number, `ramp` or `from-initial`"))
            })?),
        };
        let initial = match initial {
            Some(i) => i,
            None => match boundary_text.as_str() {
                "ramp" => InitialSpec::LinearRamp { axis, start, end },
                s => InitialSpec::Constant(s.parse().expect("checked above")),
            },
        };
        Ok((boundary, initial))
    }

    fn dimensionless(&self) -> Result<DimensionlessConfig> {
        let s = "dimensionless";
        let phi: f64 = self.required(s, "phi")?;
        let v1: f64 = self.number(s, "v1")?.unwrap_or(0.0);
        let v2: f64 = self.number(s, "v2")?.unwrap_or(0.0);
        let delta: f64 = self.required(s, "delta")?;
        let (nx, ny) = self.grid_counts(s)?;
        if !(delta.is_finite() && delta > 0.0) {
            return Err(self.invalid(s, "delta", "must be positive"));
        }
        let grid = Grid2D::new(nx, ny, delta, delta)?;
        let (boundary, initial) = self.data(s, &grid)?;
        DimensionlessConfig::new(phi, (v1, v2), delta, (nx, ny), boundary, initial)
            .map_err(|e| Error::Config(format!("[{s}]: {e}")))
    }

    fn einstein_tol(&self) -> Result<Option<f64>> {
        let s = "physical";
        match self.string(s, "einstein_tol") {
            Some("off") => Ok(None),
            Some(_) => match self.number::<f64>(s, "einstein_tol")? {
                Some(t) if t.is_finite() && t >= 0.0 => Ok(Some(t)),
                _ => Err(self.invalid(s, "einstein_tol", "must be a non-negative number or off")),
            },
            None => Ok(Some(DEFAULT_EINSTEIN_TOL)),
        }
    }

    fn physical(&self) -> Result<PhysicalProblem> {
        let s = "physical";
        let e_charge: f64 = self.number(s, "e_charge")?.unwrap_or(ELEMENTARY_CHARGE_ESU);
        let temperature: f64 = self.required(s, "temperature")?;
        let d_e: f64 = self.required(s, "d_e")?;
        let d_i: f64 = self.required(s, "d_i")?;
        let mu = |key: &'static str, d: f64| -> Result<f64> {
            match self.number::<f64>(s, key)? {
                Some(m) => Ok(m),
                None => mobility_from_diffusivity(d, temperature, e_charge),
            }
        };
        let params = PhysicalParams {
            d_e,
            d_i,
            mu_e: mu("mu_e", d_e)?,
            mu_i: mu("mu_i", d_i)?,
            alpha_i: self.required(s, "alpha_i")?,
            alpha_r: self.required(s, "alpha_r")?,
            n_neutral: self.required(s, "n_neutral")?,
            e_charge,
            temperature,
        };
        params.validate().map_err(|e| Error::Config(format!("[{s}]: {e}")))?;
        let given = self.string(s, "mu_e").is_some() || self.string(s, "mu_i").is_some();
        if let Some(tol) = self.einstein_tol()? {
            if given {
                params
                    .check_einstein(tol)
                    .map_err(|e| Error::Config(format!("[{s}]: {e}")))?;
            }
        }
        let lambda: f64 = self.required(s, "lambda")?;
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(self.invalid(s, "lambda", "must be positive"));
        }
        let (nx, ny) = self.grid_counts(s)?;
        let grid = Grid2D::new(nx, ny, lambda, lambda)?;
        let (boundary, initial) = self.data(s, &grid)?;
        let problem = PhysicalProblem {
            params,
            velocity: (
                self.number(s, "v_x")?.unwrap_or(0.0),
                self.number(s, "v_y")?.unwrap_or(0.0),
            ),
            lambda,
            grid,
            boundary,
            initial,
        };
        problem
            .to_dimensionless()
            .map_err(|e| Error::Config(format!("[{s}]: {e}")))?;
        Ok(problem)
    }

    fn time_step(&self, section: &str) -> Result<TimeStep> {
        match self.string(section, "dt") {
            None | Some("auto") => Ok(TimeStep::Auto),
            Some(v) => match v.parse::<f64>() {
                Ok(dt) if dt.is_finite() && dt > 0.0 => Ok(TimeStep::Fixed(dt)),
                _ => Err(self.invalid(section, "dt", format!("expected `auto` or a positive number, got {v:?}"))),
            },
        }
    }

    fn solver(&self) -> Result<SolverSettings> {
        let s = "solver";
        let d = SolverSettings::default();
        let exec = match self.string(s, "exec").unwrap_or("auto") {
            "auto" => Exec::Auto,
            "sequential" => Exec::Sequential,
            "parallel" => Exec::Parallel,
            other => return Err(self.invalid(s, "exec", format!("expected auto, sequential or parallel, got {other:?}"))),
        };
        let settings = SolverSettings {
            dt: self.time_step(s)?,
            safety: self.number(s, "safety")?.unwrap_or(d.safety),
            steady_tol: self.number(s, "steady_tol")?.unwrap_or(d.steady_tol),
            max_steps: self.number(s, "max_steps")?.unwrap_or(d.max_steps),
            snapshot_every: self.number(s, "snapshot_every")?.unwrap_or(d.snapshot_every),
            exec,
        };
        settings.validate().map_err(|e| Error::Config(format!("[{s}]: {e}")))?;
        Ok(settings)
    }

    fn full(&self) -> Result<FullSettings> {
        let s = "full";
        let d = FullSettings::default();
        let gauss_sign = match self.string(s, "gauss_sign").unwrap_or("physical") {
            "physical" => GaussSign::Physical,
            "as-printed" => GaussSign::AsPrinted,
            other => return Err(self.invalid(s, "gauss_sign", format!("expected physical or as-printed, got {other:?}"))),
        };
        let f = FullSettings {
            dt: self.time_step(s)?,
            safety: self.number(s, "safety")?.unwrap_or(d.safety),
            poisson_tol: self.number(s, "poisson_tol")?.unwrap_or(d.poisson_tol),
            gauss_sign,
            neutrality_threshold: self.number(s, "threshold")?.unwrap_or(d.neutrality_threshold),
        };
        if !(f.safety > 0.0 && f.safety <= 1.0) {
            return Err(self.invalid(s, "safety", "must lie in (0, 1]"));
        }
        if !(f.poisson_tol > 0.0) {
            return Err(self.invalid(s, "poisson_tol", "must be positive"));
        }
        if !(f.neutrality_threshold > 0.0) {
            return Err(self.invalid(s, "threshold", "must be positive"));
        }
        Ok(f)
    }
}
