use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use ambidiff::config::{Mode, RawConfig, RunConfig, Scenario};
use ambidiff::scenario::run_scenario;
use ambidiff::Error;

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  usage error
  2  configuration error (syntax, unknown key, missing section)
  3  invalid parameter or grid
  4  inconsistent data (boundary/initial mismatch, corner mismatch)
  5  numerical instability (non-finite value)
  6  linear solver did not converge
  7  negative or non-positive concentration
  8  file I/O or snapshot format error
  9  quasineutrality violated (check-neutrality)

Errors print one line: `ambidiff: error[<kind>]: <message>`.
Set AMBIDIFF_LOG=error|warn|info|debug for log output on stderr.";

/// Two-dimensional ambipolar diffusion solver and drift-diffusion-Poisson
/// reference model.
#[derive(Debug, Parser)]
#[command(name = "ambidiff", version, after_help = EXIT_CODES)]
struct Cli {
    /// Mode (ambipolar, full, compare, recover-field, check-neutrality) or
    /// scenario preset (fig1, fig2).
    target: String,

    /// INI-style configuration file.
    #[arg(long, short)]
    config: Option<PathBuf>,

    /// Override a configuration key, e.g. `--set dimensionless.v1=3`.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,

    /// Output directory (overrides run.output).
    #[arg(long, short)]
    output: Option<PathBuf>,

    /// Run one independent job per value, e.g.
    /// `--sweep dimensionless.v1=0,1,3`. Each writes to its own
    /// subdirectory of the output directory.
    #[arg(long, value_name = "SECTION.KEY=V1,V2,...")]
    sweep: Option<String>,

    /// Concurrent sweep jobs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn diagnostic(kind: &str, message: &str) {
    let one_line = message.split_whitespace().collect::<Vec<_>>().join(" ");
    eprintln!("ambidiff: error[{kind}]: {one_line}");
}

fn fail(e: &Error) -> ExitCode {
    diagnostic(e.kind(), &e.to_string());
    ExitCode::from(e.exit_code() as u8)
}

fn base_config(cli: &Cli) -> Result<RawConfig, Error> {
    let mut raw = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            RawConfig::parse(&text)?
        }
        None => RawConfig::default(),
    };
    if let Ok(sc) = cli.target.parse::<Scenario>() {
        raw.set(&format!("run.scenario={}", sc.name()))?;
    } else if let Ok(mode) = cli.target.parse::<Mode>() {
        raw.set(&format!("run.mode={}", mode.name()))?;
    } else {
        return Err(Error::Config(format!(
            "unknown target {:?}: expected a mode (ambipolar, full, compare, recover-field, check-neutrality) or a scenario (fig1, fig2)",
            cli.target
        )));
    }
    for o in &cli.overrides {
        raw.set(o)?;
    }
    Ok(raw)
}

fn resolve(cli: &Cli, raw: RawConfig) -> Result<RunConfig, Error> {
    let base = cli.config.as_ref().and_then(|p| p.parent()).map(|p| p.to_path_buf());
    let mut cfg = raw.resolve(base.as_deref())?;
    if let Some(out) = &cli.output {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn single(cli: &Cli, raw: RawConfig) -> ExitCode {
    let cfg = match resolve(cli, raw) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    match run_scenario(&cfg) {
        Ok(summary) => {
            print!("{}", summary.render());
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn sweep(cli: &Cli, raw: RawConfig, spec: &str) -> ExitCode {
    let Some((key, values)) = spec.split_once('=') else {
        return fail(&Error::Config(format!("--sweep {spec:?}: expected section.key=v1,v2,...")));
    };
    let short = key.rsplit('.').next().unwrap_or(key);
    let mut jobs = Vec::new();
    for v in values.split(',').map(str::trim).filter(|v| !v.is_empty()) {
        let mut r = raw.clone();
        if let Err(e) = r.set(&format!("{key}={v}")) {
            return fail(&e);
        }
        let mut cfg = match resolve(cli, r) {
            Ok(c) => c,
            Err(e) => return fail(&e),
        };
        cfg.output_dir = cfg.output_dir.join(format!("{short}={v}"));
        jobs.push(cfg);
    }
    let results = run_jobs(&jobs, cli.jobs.max(1));
    let mut code = ExitCode::SUCCESS;
    for (cfg, r) in jobs.iter().zip(results) {
        match r {
            Ok(_) => println!("{} ok", cfg.output_dir.display()),
            Err(e) => {
                println!("{} failed", cfg.output_dir.display());
                code = fail(&e);
            }
        }
    }
    code
}

#[cfg(feature = "parallel")]
fn run_jobs(jobs: &[RunConfig], threads: usize) -> Vec<ambidiff::Result<ambidiff::scenario::Summary>> {
    use rayon::prelude::*;
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(|| jobs.par_iter().map(run_scenario).collect()),
        Err(_) => jobs.iter().map(run_scenario).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_jobs(jobs: &[RunConfig], _threads: usize) -> Vec<ambidiff::Result<ambidiff::scenario::Summary>> {
    jobs.iter().map(run_scenario).collect()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("AMBIDIFF_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                e.exit();
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            diagnostic("usage", first.trim_start_matches("error: "));
            return ExitCode::from(1);
        }
    };
    let raw = match base_config(&cli) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    match &cli.sweep {
        Some(spec) => sweep(&cli, raw, spec),
        None => single(&cli, raw),
    }
}
