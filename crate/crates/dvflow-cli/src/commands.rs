//! Subcommand pipelines. Each returns the JSON result value and the output
//! files to write.

use crate::config::{ConfigError, ExperimentConfig};
use dvflow::dynamics::{FlowContext, FlowState, Viscosity};
use dvflow::geom::vec3;
use dvflow::io::{write_csv, write_matrix_market, write_matrix_market_diagonal, CochainFile, Field, CSV_SCHEMA_VERSION};
use dvflow::mesh::{audit_mesh, write_mesh, Family, Mesh};
use dvflow::verify::{convergence_study, error_norms, interpolate, truncation_error, ConvergenceTable, DtPolicy, MeshFamily, StudyConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use std::sync::Arc;

/// Failure of a subcommand, tagged with the module that raised it.
#[derive(Debug)]
pub enum CommandError {
    Config(ConfigError),
    Library { module: &'static str, error: dvflow::Error },
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Config(_) => 1,
            CommandError::Library { error, .. } if error.is_validation() => 1,
            CommandError::Library { .. } => 2,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            CommandError::Config(e) => json!({"kind": "validation", "module": "cli", "field": e.field, "message": e.reason}),
            CommandError::Library { module, error } => {
                let field = match error {
                    dvflow::Error::InvalidArgument { field, .. } => Some(field.clone()),
                    _ => None,
                };
                let kind = if error.is_validation() { "validation" } else { "numerical" };
                json!({"kind": kind, "module": module, "field": field, "message": error.to_string()})
            }
        }
    }
}

impl From<ConfigError> for CommandError {
    fn from(e: ConfigError) -> Self {
        CommandError::Config(e)
    }
}

type Out<T> = Result<T, CommandError>;

trait Tagged<T> {
    fn or_module(self, module: &'static str) -> Out<T>;
}

impl<T> Tagged<T> for dvflow::Result<T> {
    fn or_module(self, module: &'static str) -> Out<T> {
        self.map_err(|error| CommandError::Library { module, error })
    }
}

/// Result of one subcommand.
pub struct Outcome {
    pub result: Value,
    /// `(file name, contents)` written under the output directory.
    pub files: Vec<(String, String)>,
}

/// Trailing comment block of CSV files: schema line and the config as
/// commented TOML.
pub fn csv_trailer(schema: &str, cfg: &ExperimentConfig) -> String {
    let mut s = format!("# schema {schema} {CSV_SCHEMA_VERSION}\n");
    for line in cfg.to_toml().lines() {
        s.push_str("# ");
        s.push_str(line);
        s.push('\n');
    }
    s
}

fn csv(schema: &str, cfg: &ExperimentConfig, header: &[&str], rows: &[Vec<Field>]) -> Out<String> {
    Ok(write_csv(header, rows).or_module("cli")? + &csv_trailer(schema, cfg))
}

fn comment_block(cfg: &ExperimentConfig) -> String {
    cfg.to_toml().lines().map(|l| format!("config {l}")).collect::<Vec<_>>().join("\n")
}

fn build_mesh(cfg: &ExperimentConfig) -> Out<Mesh> {
    cfg.mesh_spec()?.build(cfg.seed).or_module("mesh_complex")
}

fn viscosity_nu(v: &Viscosity) -> f64 {
    match *v {
        Viscosity::Isotropic { nu } => nu,
        _ => 0.0,
    }
}

pub fn run(cfg: &ExperimentConfig) -> Out<Outcome> {
    cfg.validate()?;
    match cfg.subcommand.as_str() {
        "mesh-audit" => mesh_audit(cfg),
        "invariants" => invariants(cfg),
        "integrate" => integrate(cfg),
        "converge" => converge(cfg),
        "truncation" => truncation(cfg),
        "eigen" => eigen(cfg),
        "export-operators" => export_operators(cfg),
        other => Err(ConfigError::new("subcommand", format!("unknown subcommand `{other}`")).into()),
    }
}

fn mesh_audit(cfg: &ExperimentConfig) -> Out<Outcome> {
    let mesh = build_mesh(cfg)?;
    let audit = audit_mesh(&mesh);
    let mut files = Vec::new();
    if cfg.output.write_mesh {
        let mut text = write_mesh(&mesh);
        for line in comment_block(cfg).lines() {
            text.push_str(&format!("# {line}\n"));
        }
        files.push(("mesh.dvm".to_string(), text));
    }
    Ok(Outcome { result: serde_json::to_value(audit).unwrap_or(Value::Null), files })
}

fn invariants(cfg: &ExperimentConfig) -> Out<Outcome> {
    let mesh = Arc::new(build_mesh(cfg)?);
    let report = dvflow::invariants::run_invariant_suite(mesh, cfg.invariants.trials, cfg.seed).or_module("dec_core")?;
    let rows: Vec<Vec<Field>> =
        report.checks.iter().map(|c| vec![c.name.clone().into(), c.max_residual.into(), c.tolerance.into(), c.trials.into(), if c.passed { "pass" } else { "fail" }.into()]).collect();
    let table = csv("dvflow-invariants", cfg, &["identity", "max_residual", "tolerance", "trials", "status"], &rows)?;
    let result = json!({
        "passed": report.passed(),
        "max_residual": report.max_residual(),
        "report": report,
    });
    Ok(Outcome { result, files: vec![("invariants.csv".into(), table)] })
}

fn integrate(cfg: &ExperimentConfig) -> Out<Outcome> {
    const M: &str = "dynamics";
    let ic = &cfg.integration;
    let visc = cfg.problem.viscosity;
    let reference = cfg.reference(viscosity_nu(&visc))?;
    let steps = (ic.t_end / ic.dt).round() as usize;
    if (steps as f64 * ic.dt - ic.t_end).abs() > 1e-9 * ic.t_end.max(1.0) {
        return Err(ConfigError::new("integration.dt", "must divide integration.t_end").into());
    }
    let mesh = Arc::new(build_mesh(cfg)?);
    if reference.dim() != mesh.dim {
        return Err(ConfigError::new("problem.reference", format!("`{}` is {}-dimensional but the mesh is {}-dimensional", reference.name(), reference.dim(), mesh.dim)).into());
    }
    let ctx = FlowContext::new(mesh.clone(), ic.extrusion).or_module(M)?;
    let mut state = FlowState::new(ctx.leray.project_force(interpolate(&mesh, &reference, 0.0)).or_module(M)?);
    let zc = if mesh.dim == 3 { 0.5 * mesh.extent()[2] } else { 0.0 };
    for l in &ic.loops {
        let gamma = ctx.loop_around(&vec3(l[0], l[1], zc), l[2]);
        state = state.with_loop(&ctx, gamma).or_module(M)?;
    }
    let n_loops = state.loops.len();
    let mut header: Vec<String> = ["step", "t", "energy", "enstrophy", "divergence", "helicity", "energy_balance"].iter().map(|s| s.to_string()).collect();
    header.extend((0..n_loops).map(|k| format!("circulation_{k}")));
    header.extend((0..n_loops).map(|k| format!("kelvin_{k}")));
    let row = |step: usize, s: &FlowState, balance: f64| -> Out<Vec<Field>> {
        let d = ctx.diagnostics(s).or_module(M)?;
        let mut r: Vec<Field> = vec![step.into(), d.t.into(), d.energy.into(), d.enstrophy.into(), d.divergence.into(), d.helicity.map_or(Field::Text(String::new()), Field::Real), balance.into()];
        r.extend(d.circulations.iter().map(|&c| Field::Real(c)));
        r.extend(d.kelvin_residuals.iter().map(|&c| Field::Real(c)));
        Ok(r)
    };
    let d0 = ctx.diagnostics(&state).or_module(M)?;
    let mut rows = vec![row(0, &state, 0.0)?];
    let (mut max_balance, mut max_rise, mut min_ratio, mut max_div) = (0.0f64, f64::NEG_INFINITY, 1.0f64, d0.divergence);
    let mut e_prev = d0.energy;
    for k in 1..=steps {
        let (next, reports) = ctx.advance(&state, ic.dt, &visc, ic.tol, ic.stepper).or_module(M)?;
        state = next;
        state.t = k as f64 * ic.dt;
        let balance = reports.iter().map(|r| r.energy_balance.abs()).fold(0.0, f64::max);
        max_balance = max_balance.max(balance);
        let e = ctx.energy(&state.v);
        max_rise = max_rise.max(e - e_prev);
        min_ratio = min_ratio.min(e / d0.energy);
        max_div = max_div.max(ctx.divergence_residual(&state.v));
        e_prev = e;
        if k % ic.cadence == 0 || k == steps {
            rows.push(row(k, &state, balance)?);
        }
    }
    if !state.v.iter().all(|x| x.is_finite()) {
        return Err(CommandError::Library { module: M, error: dvflow::Error::Numerical("non-finite velocity".into()) });
    }
    let d1 = ctx.diagnostics(&state).or_module(M)?;
    let circulation_drift: Vec<f64> = d0.circulations.iter().zip(&d1.circulations).map(|(a, b)| (b - a).abs()).collect();
    let exact = if reference.is_solution() { Some(error_norms(&ctx.ops, &state.v, &reference, state.t, false).or_module("verification")?) } else { None };
    let mut files = Vec::new();
    let h: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    files.push(("diagnostics.csv".to_string(), csv("dvflow-diagnostics", cfg, &h, &rows)?));
    let comment = comment_block(cfg);
    files.push(("velocity.cochain".into(), CochainFile::new(&mesh, 1, state.v.clone()).or_module("cli")?.write_with_comment(&comment)));
    let mut pressure_summary = Value::Null;
    if ic.pressure {
        let dim = mesh.dim;
        let phi: Option<Vec<f64>> = (cfg.problem.gravity != 0.0).then(|| mesh.cells.iter().map(|c| cfg.problem.gravity * c.centre[dim - 1]).collect());
        let vf = if visc.is_none() { None } else { Some(ctx.viscous_force(&visc, &state.v).or_module(M)?) };
        let p = ctx.leray.pressure_recover(&ctx.recon, &state.v, phi.as_deref(), vf.as_deref()).or_module("leray_pressure")?;
        pressure_summary = json!({"norm_m0": ctx.ops.norm_m0(&p), "mean": ctx.ops.mean0(&p)});
        files.push(("pressure.cochain".into(), CochainFile::new(&mesh, 0, p).or_module("cli")?.write_with_comment(&comment)));
    }
    let result = json!({
        "reference": reference.name(),
        "steps": steps,
        "t_final": state.t,
        "initial": d0,
        "final": d1,
        "relative_energy_drift": (d1.energy - d0.energy).abs() / d0.energy,
        "max_energy_balance": max_balance,
        "max_energy_increase": max_rise.max(0.0),
        "min_energy_ratio": min_ratio,
        "max_divergence": max_div,
        "circulation_drift": circulation_drift,
        "error": exact,
        "pressure": pressure_summary,
    });
    Ok(Outcome { result, files })
}

/// Acceptance band of a fitted slope.
fn band(quantity: &str, family: Family) -> (f64, f64) {
    match (quantity, family) {
        (_, Family::Equilateral) => (1.75, 2.25),
        ("truncation", Family::Perturbed) => (0.75, 1.25),
        (_, Family::Perturbed) => (0.8, f64::INFINITY),
    }
}

fn judge(quantity: &str, table: &ConvergenceTable) -> Value {
    let (lo, hi) = band(quantity, table.family);
    let pass = table.slope().is_some_and(|s| s >= lo && s <= hi);
    json!({
        "slope": table.slope(),
        "band95": table.fit.as_ref().map(|f| f.band),
        "monotone": table.monotone,
        "expected": [lo, if hi.is_finite() { Some(hi) } else { None }],
        "pass": pass,
    })
}

fn study_mesh(cfg: &ExperimentConfig) -> MeshFamily {
    let s = &cfg.study;
    MeshFamily { family: s.family, perturbation: if s.family == Family::Perturbed { s.perturbation } else { 0.0 }, seed: cfg.seed }
}

fn converge(cfg: &ExperimentConfig) -> Out<Outcome> {
    const M: &str = "verification";
    let s = &cfg.study;
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    let mut slopes = Vec::new();
    for &nu in &s.nus {
        let study = StudyConfig {
            reference: cfg.reference(nu)?,
            mesh: study_mesh(cfg),
            resolutions: s.resolutions.clone(),
            t_end: s.t_end,
            dt: DtPolicy { c: s.dt_c, dt_max: s.dt_max },
            tol: s.tol,
            extrusion: cfg.integration.extrusion,
            cadence: cfg.integration.cadence,
        };
        let (study_rows, table) = convergence_study(&study).or_module(M)?;
        for r in &study_rows {
            rows.push(vec![nu.into(), r.n.into(), r.h.into(), r.dt.into(), r.steps.into(), r.sup_l2h.into(), r.final_rec.into(), r.energy_drift.into()]);
        }
        slopes.push(table.slope());
        fits.push(json!({"nu": nu, "fit": judge("convergence", &table), "table": table}));
    }
    let spread = if slopes.iter().all(|s| s.is_some()) && slopes.len() > 1 {
        let v: Vec<f64> = slopes.iter().flatten().copied().collect();
        Some(v.iter().copied().fold(f64::NEG_INFINITY, f64::max) - v.iter().copied().fold(f64::INFINITY, f64::min))
    } else {
        None
    };
    let all_pass = fits.iter().all(|f| f["fit"]["pass"] == json!(true)) && spread.map_or(slopes.len() == 1, |d| d <= 0.15);
    let table = csv("dvflow-converge", cfg, &["nu", "n", "h", "dt", "steps", "sup_l2h", "final_rec", "energy_drift"], &rows)?;
    let result = json!({"family": s.family, "studies": fits, "nu_spread": spread, "nu_spread_max": 0.15, "pass": all_pass});
    Ok(Outcome { result, files: vec![("converge.csv".into(), table)] })
}

fn truncation(cfg: &ExperimentConfig) -> Out<Outcome> {
    const M: &str = "verification";
    let s = &cfg.study;
    let reference = cfg.reference(s.nus[0])?;
    let fam = study_mesh(cfg);
    let mut rows = Vec::new();
    let (mut hs, mut errs) = (Vec::new(), Vec::new());
    for &n in &s.resolutions {
        let mesh = Arc::new(fam.build(&reference, n).or_module("mesh_complex")?);
        let h = mesh.h();
        let ctx = FlowContext::new(mesh, cfg.integration.extrusion).or_module(M)?;
        let tau = truncation_error(&ctx, &reference, s.t).or_module(M)?;
        rows.push(vec![n.into(), h.into(), tau.into()]);
        hs.push(h);
        errs.push(tau);
    }
    let table = ConvergenceTable::new("truncation", s.family, s.resolutions.clone(), hs, errs, 0.0);
    let fit = judge("truncation", &table);
    let pass = fit["pass"].clone();
    let text = csv("dvflow-truncation", cfg, &["n", "h", "truncation"], &rows)?;
    Ok(Outcome { result: json!({"family": s.family, "fit": fit, "table": table, "pass": pass}), files: vec![("truncation.csv".into(), text)] })
}

fn eigen(cfg: &ExperimentConfig) -> Out<Outcome> {
    const M: &str = "leray_pressure";
    let mesh = Arc::new(build_mesh(cfg)?);
    let ctx = FlowContext::new(mesh.clone(), cfg.integration.extrusion).or_module(M)?;
    let leray = &ctx.leray;
    let mu1 = leray.scalar_poincare_constant().or_module(M)?;
    let (lambda, harmonic) = if mesh.is_periodic() {
        let pairs = leray.curl_curl_spectrum(cfg.eigen.wanted, true).or_module(M)?;
        (Some(pairs.values), Some(leray.harmonic_dimension().or_module(M)?))
    } else {
        (None, None)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut quotients = Vec::with_capacity(cfg.eigen.samples);
    for _ in 0..cfg.eigen.samples {
        let mut q: Vec<f64> = (0..mesh.n_cells()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mean = ctx.ops.mean0(&q);
        q.iter_mut().for_each(|x| *x -= mean);
        quotients.push(leray.infsup_quotient(&q).or_module(M)?);
    }
    let min_q = quotients.iter().copied().fold(f64::INFINITY, f64::min);
    let result = json!({
        "lambda": lambda,
        "lambda_1": lambda.as_ref().map(|l| l[0]),
        "mu_1": mu1,
        "infsup_constant": mu1.sqrt(),
        "infsup_min_quotient": if quotients.is_empty() { None } else { Some(min_q) },
        "harmonic_dimension": harmonic,
        "h": mesh.h(),
    });
    Ok(Outcome { result, files: Vec::new() })
}

fn export_operators(cfg: &ExperimentConfig) -> Out<Outcome> {
    let mesh = Arc::new(build_mesh(cfg)?);
    let ops = dvflow::dec::assemble_operators(mesh.clone()).or_module("dec_core")?;
    let block = comment_block(cfg);
    let note = |what: &str| format!("dvflow operator {what}\n{block}");
    let mut files = Vec::new();
    let mut matrices = vec![("dt0", &ops.dt0), ("dt1", &ops.dt1), ("div", &ops.div), ("lap", &ops.lap), ("curl_curl", &ops.curl_curl)];
    if mesh.dim == 3 {
        matrices.insert(2, ("dt2", &ops.dt2));
    }
    let mut listing = Vec::new();
    for (name, m) in matrices {
        files.push((format!("{name}.mtx"), write_matrix_market(m, &note(name))));
        listing.push(json!({"name": name, "rows": m.nrows, "cols": m.ncols, "nnz": m.nnz()}));
    }
    for k in 0..=mesh.dim {
        let d = ops.hodge(k);
        let name = format!("m{k}");
        files.push((format!("{name}.mtx"), write_matrix_market_diagonal(d, &note(&name))));
        listing.push(json!({"name": name, "rows": d.len(), "cols": d.len(), "nnz": d.len()}));
    }
    Ok(Outcome { result: json!({"operators": listing}), files })
}
