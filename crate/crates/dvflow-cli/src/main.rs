//! `dvflow`: experiment runner for the dual-Voronoi flow solver.
//!
//! Every subcommand reads an optional TOML config (`--config`), applies the
//! command-line overrides, validates the result and prints a JSON report on
//! stdout. With `--out <dir>` the report and the CSV, cochain, mesh or
//! matrix-market files of the subcommand are also written there.
//!
//! Exit status: 0 on success, 1 on validation errors (bad flags, config,
//! mesh or input files), 2 on numerical failures.

mod commands;
mod config;
mod meshspec;

use clap::{Args, Parser, Subcommand};
use config::{parse_list, parse_viscosity, ConfigError, ExperimentConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "dvflow", version, about = "Structure-preserving incompressible flow on Delaunay-Voronoi complexes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mesh-quality audit of a complex.
    MeshAudit(Flags),
    /// Randomized check of the exact algebraic identities.
    Invariants(Flags),
    /// Time integration with diagnostics and checkpoints.
    Integrate(Flags),
    /// Convergence study against a reference solution.
    Converge(Flags),
    /// Consistency (truncation) study against a reference solution.
    Truncation(Flags),
    /// Lowest eigenvalues, inf-sup constant and harmonic dimension.
    Eigen(Flags),
    /// Write the assembled operators as matrix-market files.
    ExportOperators(Flags),
}

impl Command {
    fn split(self) -> (&'static str, Flags) {
        match self {
            Command::MeshAudit(f) => ("mesh-audit", f),
            Command::Invariants(f) => ("invariants", f),
            Command::Integrate(f) => ("integrate", f),
            Command::Converge(f) => ("converge", f),
            Command::Truncation(f) => ("truncation", f),
            Command::Eigen(f) => ("eigen", f),
            Command::ExportOperators(f) => ("export-operators", f),
        }
    }
}

/// Overrides of config values; each flag replaces the corresponding key.
#[derive(Args, Debug, Default)]
#[command(allow_negative_numbers = true)]
struct Flags {
    /// TOML experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Mesh spec, e.g. `torus:perturbed:32:0.15`, `prism:B:8:4`, `file:m.dvm`.
    #[arg(long)]
    mesh: Option<String>,
    /// Reference problem: tg2d, tg2d-mean, abc3d, square-noslip.
    #[arg(long)]
    problem: Option<String>,
    /// none, isotropic:<nu>, anisotropic:<nu_h>,<nu_v>, smagorinsky:<cs>.
    #[arg(long)]
    viscosity: Option<String>,
    #[arg(long)]
    mean_flow: Option<f64>,
    #[arg(long)]
    gravity: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    /// implicit-midpoint or forward-euler.
    #[arg(long)]
    stepper: Option<String>,
    /// dual-cell, face-average or arithmetic-mean.
    #[arg(long)]
    extrusion: Option<String>,
    #[arg(long)]
    cadence: Option<usize>,
    /// Advected loop `<x>,<y>,<radius>`; repeatable, replaces the config list.
    #[arg(long = "loop")]
    loops: Vec<String>,
    /// Recover and write the pressure at the final time.
    #[arg(long)]
    pressure: bool,
    /// Study family: equilateral (B) or perturbed (A).
    #[arg(long)]
    family: Option<String>,
    /// Comma-separated study resolutions.
    #[arg(long)]
    resolutions: Option<String>,
    #[arg(long)]
    perturbation: Option<f64>,
    /// Comma-separated study viscosities.
    #[arg(long)]
    nus: Option<String>,
    #[arg(long)]
    study_t_end: Option<f64>,
    #[arg(long)]
    dt_c: Option<f64>,
    #[arg(long)]
    dt_max: Option<f64>,
    /// Evaluation time of the truncation error.
    #[arg(long)]
    time: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    wanted: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the complex (mesh-audit).
    #[arg(long)]
    write_mesh: bool,
}

fn parsed<T: std::str::FromStr>(field: &str, s: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| ConfigError::new(field, e.to_string()))
}

fn from_json_str<T: serde::de::DeserializeOwned>(field: &str, s: &str) -> Result<T, ConfigError> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| ConfigError::new(field, e.to_string()))
}

fn load(sub: &str, f: Flags) -> Result<ExperimentConfig, ConfigError> {
    let mut c = match &f.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| ConfigError::new("config", format!("{}: {e}", p.display())))?;
            ExperimentConfig::from_toml(&text)?
        }
        None => ExperimentConfig::default(),
    };
    c.subcommand = sub.to_string();
    macro_rules! set {
        ($flag:expr, $dst:expr) => {
            if let Some(v) = $flag {
                $dst = v;
            }
        };
    }
    set!(f.seed, c.seed);
    set!(f.mesh, c.mesh);
    set!(f.problem, c.problem.reference);
    if let Some(v) = &f.viscosity {
        c.problem.viscosity = parse_viscosity(v)?;
    }
    set!(f.mean_flow, c.problem.mean_flow);
    set!(f.gravity, c.problem.gravity);
    set!(f.t_end, c.integration.t_end);
    set!(f.dt, c.integration.dt);
    if let Some(t) = f.tol {
        c.integration.tol = t;
        c.study.tol = t;
    }
    if let Some(s) = &f.stepper {
        c.integration.stepper = from_json_str("integration.stepper", s)?;
    }
    if let Some(s) = &f.extrusion {
        c.integration.extrusion = parsed("integration.extrusion", s)?;
    }
    set!(f.cadence, c.integration.cadence);
    if !f.loops.is_empty() {
        c.integration.loops = f
            .loops
            .iter()
            .map(|s| {
                let v: Vec<f64> = parse_list("integration.loops", s)?;
                <[f64; 3]>::try_from(v).map_err(|_| ConfigError::new("integration.loops", format!("`{s}` is not <x>,<y>,<radius>")))
            })
            .collect::<Result<_, _>>()?;
    }
    c.integration.pressure |= f.pressure;
    if let Some(s) = &f.family {
        c.study.family = parsed("study.family", s)?;
    }
    if let Some(s) = &f.resolutions {
        c.study.resolutions = parse_list("study.resolutions", s)?;
    }
    set!(f.perturbation, c.study.perturbation);
    if let Some(s) = &f.nus {
        c.study.nus = parse_list("study.nus", s)?;
    }
    set!(f.study_t_end, c.study.t_end);
    set!(f.dt_c, c.study.dt_c);
    set!(f.dt_max, c.study.dt_max);
    set!(f.time, c.study.t);
    set!(f.trials, c.invariants.trials);
    set!(f.wanted, c.eigen.wanted);
    set!(f.samples, c.eigen.samples);
    if f.out.is_some() {
        c.output.dir = f.out;
    }
    c.output.write_mesh |= f.write_mesh;
    Ok(c)
}

fn fail(err: serde_json::Value, code: u8) -> ExitCode {
    eprintln!("{err}");
    ExitCode::from(code)
}

fn write_outputs(cfg: &ExperimentConfig, report: &str, files: &[(String, String)]) -> std::io::Result<()> {
    let Some(dir) = &cfg.output.dir else { return Ok(()) };
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), report)?;
    for (name, text) in files {
        std::fs::write(dir.join(name), text)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                let code = if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand { 1 } else { 0 };
                return ExitCode::from(code);
            }
            return fail(serde_json::json!({"kind": "validation", "module": "cli", "field": null, "message": e.to_string().trim()}), 1);
        }
    };
    let (sub, flags) = cli.command.split();
    let cfg = match load(sub, flags) {
        Ok(c) => c,
        Err(e) => return fail(commands::CommandError::Config(e).to_json(), 1),
    };
    let outcome = match commands::run(&cfg) {
        Ok(o) => o,
        Err(e) => return fail(e.to_json(), e.exit_code() as u8),
    };
    let report = match dvflow::io::write_report(&format!("dvflow-{sub}"), &cfg, &outcome.result) {
        Ok(r) => r,
        Err(e) => return fail(commands::CommandError::Library { module: "cli", error: e }.to_json(), 2),
    };
    if let Err(e) = write_outputs(&cfg, &report, &outcome.files) {
        return fail(commands::CommandError::Library { module: "cli", error: e.into() }.to_json(), 1);
    }
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{report}");
    ExitCode::SUCCESS
}
