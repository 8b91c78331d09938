//! Acceptance report: one pass/fail line per criterion.
//!
//! Tolerances, meshes and resolutions are fixed here. A failing criterion
//! prints `FAIL` with its measured values; the process exits with status 0
//! so that the report is always produced, unless `DVFLOW_ACCEPTANCE_STRICT`
//! is set, in which case any failure gives status 1.

use dvflow::dec::{de_rham_0, de_rham_1};
use dvflow::dynamics::{FlowContext, FlowState, Stepper, Viscosity};
use dvflow::geom::{vec3, Vec3};
use dvflow::invariants::run_invariant_suite;
use dvflow::mesh::{build_square_dirichlet, build_torus_mesh, extrude_prismatic, Family, Mesh};
use dvflow::recon::Extrusion;
use dvflow::verify::{auxiliary_errors, conserved_quantity_convergence, convergence_study, interpolate, truncation_error, ConvergenceTable, MeshFamily, Reference, StudyConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

type Res<T> = dvflow::Result<T>;

struct Verdict {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

impl Verdict {
    fn new(pass: bool, summary: impl Into<String>) -> Self {
        Verdict { pass, summary: summary.into(), details: Vec::new() }
    }

    fn detail(mut self, lines: Vec<String>) -> Self {
        self.details = lines;
        self
    }
}

const FAMILIES: [Family; 2] = [Family::Equilateral, Family::Perturbed];

/// Hodge consistency order per family.
fn r_star(f: Family) -> f64 {
    match f {
        Family::Equilateral => 2.0,
        Family::Perturbed => 1.0,
    }
}

/// Reconstruction order per family.
fn r_rec(f: Family) -> f64 {
    r_star(f)
}

fn label(f: Family) -> &'static str {
    match f {
        Family::Equilateral => "B",
        Family::Perturbed => "A",
    }
}

fn torus(n: usize, f: Family) -> Res<Arc<Mesh>> {
    let pert = if f == Family::Perturbed { dvflow::verify::DEFAULT_PERTURBATION } else { 0.0 };
    Ok(Arc::new(build_torus_mesh(n, f, pert, 1)?))
}

fn prism(n: usize, layers: usize, f: Family) -> Res<Arc<Mesh>> {
    let pert = if f == Family::Perturbed { dvflow::verify::DEFAULT_PERTURBATION } else { 0.0 };
    let layer = build_torus_mesh(n, f, pert, 1)?;
    Ok(Arc::new(extrude_prismatic(&layer, layers, &[2.0 * PI / layers as f64])?))
}

/// Divergence-free, time-dependent 2D field from the stream function
/// `sin x sin y + 0.6 cos(2x - y + 0.3) + 0.4 sin(x + 3y)`.
fn unsteady_field(x: &Vec3) -> Vec3 {
    let a = 2.0 * x.x - x.y + 0.3;
    let b = x.x + 3.0 * x.y;
    vec3(x.x.sin() * x.y.cos() + 0.6 * a.sin() + 1.2 * b.cos(), -x.x.cos() * x.y.sin() + 1.2 * a.sin() - 0.4 * b.cos(), 0.0)
}

fn fmt_slope(s: Option<f64>) -> String {
    s.map_or("none".into(), |s| format!("{s:.3}"))
}

fn within(s: Option<f64>, target: f64, tol: f64) -> bool {
    s.is_some_and(|s| (s - target).abs() <= tol)
}

fn table_line(t: &ConvergenceTable) -> String {
    let errs: Vec<String> = t.error.iter().map(|e| format!("{e:.3e}")).collect();
    format!("{} {}: n={:?} err=[{}] slope {}", t.quantity, label(t.family), t.resolutions, errs.join(", "), fmt_slope(t.slope()))
}

fn c1_identities() -> Res<Verdict> {
    let t0 = Instant::now();
    let meshes = [("torus B n=16", torus(16, Family::Equilateral)?), ("torus A n=32", torus(32, Family::Perturbed)?), ("square A n=16", Arc::new(build_square_dirichlet(16, Family::Perturbed, 0.15, 1)?)), ("prism A 8x8x4", prism(8, 4, Family::Perturbed)?)];
    let mut pass = true;
    let mut worst = 0.0f64;
    let mut details = Vec::new();
    for (name, m) in meshes {
        let rep = run_invariant_suite(m, 1000, 7)?;
        pass &= rep.passed();
        worst = worst.max(rep.max_residual());
        for c in rep.checks.iter().filter(|c| !c.passed) {
            details.push(format!("{name}: {} residual {:.3e} > {:.1e}", c.name, c.max_residual, c.tolerance));
        }
        details.push(format!("{name}: {} identities, max residual {:.3e}", rep.checks.len(), rep.max_residual()));
    }
    let secs = t0.elapsed().as_secs_f64();
    let timed = secs < 10.0;
    Ok(Verdict::new(pass && timed, format!("exact identity suite, 4 meshes x 1000 trials: max residual {worst:.2e}, {secs:.1} s (limit 10 s)")).detail(details))
}

fn c2_conservation(min_ratio: &mut f64) -> Res<Verdict> {
    let t0 = Instant::now();
    let m = torus(16, Family::Perturbed)?;
    let ctx = FlowContext::new(m.clone(), Extrusion::DualCell)?;
    let v0 = ctx.leray.project_force(de_rham_1(&m, &unsteady_field))?;
    let gamma = ctx.loop_around(&vec3(PI, PI, 0.0), 1.5);
    let mut s = FlowState::new(v0.clone()).with_loop(&ctx, gamma)?;
    let (e0, g0) = (ctx.energy(&s.v), s.circulations()[0]);
    let (mut drift, mut circ) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        s = ctx.advance(&s, 1e-2, &Viscosity::None, 1e-13, Stepper::ImplicitMidpoint)?.0;
        let e = ctx.energy(&s.v);
        drift = drift.max((e - e0).abs() / e0);
        *min_ratio = min_ratio.min(e / e0);
        circ = circ.max((s.circulations()[0] - g0).abs());
    }
    let visc = Viscosity::Isotropic { nu: 1e-2 };
    let mut s = FlowState::new(v0);
    let mut balance = 0.0f64;
    for _ in 0..100 {
        let (next, reports) = ctx.advance(&s, 1e-2, &visc, 1e-13, Stepper::ImplicitMidpoint)?;
        balance = reports.iter().map(|r| r.energy_balance.abs()).fold(balance, f64::max);
        s = next;
    }
    let balance_rel = balance / e0;
    let secs = t0.elapsed().as_secs_f64();
    let pass = drift <= 1e-10 && circ <= 1e-8 && balance_rel <= 1e-12 && secs <= 60.0;
    Ok(Verdict::new(pass, format!("conservation through integration: energy drift {drift:.2e} (<= 1e-10), loop circulation drift {circ:.2e} (<= 1e-8), NS per-step energy residual {balance_rel:.2e} of E(0) (<= 1e-12), {secs:.1} s"))
        .detail(vec![format!("torus A n=16, T=1, dt=1e-2, tol=1e-13, |Gamma(0)| = {:.3e}, absolute NS residual {balance:.2e}, E(0) = {e0:.4}", g0.abs())]))
}

fn c3_reversibility(min_ratio: &mut f64) -> Res<Verdict> {
    let m = torus(16, Family::Perturbed)?;
    let ctx = FlowContext::new(m.clone(), Extrusion::DualCell)?;
    let v0 = ctx.leray.project_force(de_rham_1(&m, &unsteady_field))?;
    let mid = ctx.time_reverse_check(&v0, 0.5, 1e-2, 1e-13, Stepper::ImplicitMidpoint)?;
    let fe = ctx.time_reverse_check(&v0, 0.5, 1e-2, 1e-13, Stepper::ForwardEuler)?;
    let e0 = ctx.energy(&v0);
    let s = ctx.run(&FlowState::new(v0), 1e-2, 50, &Viscosity::None, 1e-13, Stepper::ImplicitMidpoint)?;
    *min_ratio = min_ratio.min(ctx.energy(&s.v) / e0);
    Ok(Verdict::new(mid <= 1e-8 && fe >= 1e-3, format!("time reversal, T=0.5, dt=1e-2: midpoint return error {mid:.2e} (<= 1e-8), forward Euler {fe:.2e} (>= 1e-3)")))
}

fn c4_truncation() -> Res<Verdict> {
    let t0 = Instant::now();
    let r = Reference::taylor_green_2d(0.0)?;
    let ns = vec![8, 16, 32, 64];
    let mut pass = true;
    let mut parts = Vec::new();
    let mut details = Vec::new();
    for f in FAMILIES {
        let (mut h, mut e) = (Vec::new(), Vec::new());
        for &n in &ns {
            let m = torus(n, f)?;
            h.push(m.h());
            let ctx = FlowContext::new(m, Extrusion::DualCell)?;
            e.push(truncation_error(&ctx, &r, 0.0)?);
        }
        let t = ConvergenceTable::new("truncation", f, ns.clone(), h, e, 0.0);
        let ok = within(t.slope(), r_star(f), 0.25);
        pass &= ok;
        parts.push(format!("{} {} (expect {} +- 0.25)", label(f), fmt_slope(t.slope()), r_star(f)));
        details.push(table_line(&t));
    }
    let secs = t0.elapsed().as_secs_f64();
    Ok(Verdict::new(pass && secs <= 120.0, format!("consistency |P_h tau_h| slopes: {}, {secs:.1} s", parts.join(", "))).detail(details))
}

fn c5_convergence() -> Res<Verdict> {
    let t0 = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    let mut details = Vec::new();
    for f in FAMILIES {
        let mut slopes = Vec::new();
        for nu in [0.0, 1e-3, 1e-2] {
            let cfg = StudyConfig::new(Reference::taylor_green_2d(nu)?, f, vec![8, 16, 32, 64], 1.0);
            let (rows, t) = convergence_study(&cfg)?;
            let s = t.slope();
            let ok = match f {
                Family::Equilateral => within(s, 2.0, 0.25),
                Family::Perturbed => s.is_some_and(|s| s >= 0.8),
            };
            pass &= ok;
            slopes.push(s.unwrap_or(f64::NAN));
            details.push(format!("nu={nu:.0e} {} (steps {:?})", table_line(&t), rows.iter().map(|r| r.steps).collect::<Vec<_>>()));
        }
        let spread = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max) - slopes.iter().copied().fold(f64::INFINITY, f64::min);
        pass &= spread <= 0.15;
        let expect = if f == Family::Equilateral { "2 +- 0.25" } else { ">= 0.8" };
        parts.push(format!("{} {:?} (expect {expect}, spread {spread:.3} <= 0.15)", label(f), slopes.iter().map(|s| (s * 1000.0).round() / 1000.0).collect::<Vec<_>>()));
    }
    let secs = t0.elapsed().as_secs_f64();
    Ok(Verdict::new(pass && secs <= 600.0, format!("sup-t L2h convergence for nu in {{0, 1e-3, 1e-2}}: {}, {secs:.1} s", parts.join("; "))).detail(details))
}

fn c6_auxiliary() -> Res<Verdict> {
    let r = Reference::taylor_green_2d(0.0)?;
    let ns = vec![8, 16, 32, 64, 128];
    let mut pass = true;
    let mut failed = Vec::new();
    let mut details = Vec::new();
    let mut check = |t: &ConvergenceTable, expect: f64, pass: &mut bool, details: &mut Vec<String>| {
        let ok = within(t.slope(), expect, 0.25);
        *pass &= ok;
        if !ok {
            failed.push(format!("{} {}", t.quantity, label(t.family)));
        }
        details.push(format!("{} [expect {expect} +- 0.25: {}]", table_line(t), if ok { "pass" } else { "FAIL" }));
    };
    for f in FAMILIES {
        let mut h = Vec::new();
        let mut rows = Vec::new();
        for &n in &ns {
            let m = torus(n, f)?;
            h.push(m.h());
            let ctx = FlowContext::new(m, Extrusion::DualCell)?;
            rows.push(auxiliary_errors(&ctx, &r, 0.0)?);
        }
        let tab = |name: &str, e: Vec<f64>| ConvergenceTable::new(name, f, ns.clone(), h.clone(), e, 0.0);
        check(&tab("hodge", rows.iter().map(|a| a.hodge).collect()), r_star(f), &mut pass, &mut details);
        check(&tab("projection", rows.iter().map(|a| a.projection).collect()), r_star(f), &mut pass, &mut details);
        check(&tab("reconstruction", rows.iter().map(|a| a.reconstruction).collect()), r_rec(f), &mut pass, &mut details);
        details.push(format!("{} [supplementary, not judged]", table_line(&tab("face-average reconstruction", rows.iter().map(|a| a.face_average).collect()))));
        check(&tab("whitney", rows.iter().map(|a| a.whitney.unwrap_or(f64::NAN)).collect()), 1.0, &mut pass, &mut details);

        let mean = Reference::MeanFlowTaylorGreen { nu: 0.0, u0: 0.5 };
        let (crow, ctabs) = conserved_quantity_convergence(&mean, MeshFamily::new(f), &[8, 16, 32, 64], 0.5, 0.05, 1e-13)?;
        for t in &ctabs {
            let expect = if t.quantity == "energy" { r_star(f) } else { 1.0 };
            check(t, expect, &mut pass, &mut details);
        }
        let drift = crow.iter().map(|c| c.energy_drift).fold(0.0, f64::max);
        pass &= drift <= 1e-10;
        details.push(format!("energy conservation {} over T=0.5: max relative drift {drift:.2e} (<= 1e-10)", label(f)));

        let abc = Reference::abc_reference_3d(0.0)?;
        let (hrow, htabs) = conserved_quantity_convergence(&abc, MeshFamily::new(f), &[8, 12, 16, 24], 0.1, 0.05, 1e-13)?;
        for t in htabs.iter().filter(|t| t.quantity == "helicity") {
            let mut t = t.clone();
            t.quantity = "helicity (3D)".into();
            check(&t, r_rec(f).min(r_star(f)), &mut pass, &mut details);
        }
        let drift3 = hrow.iter().map(|c| c.energy_drift).fold(0.0, f64::max);
        pass &= drift3 <= 1e-10;
        details.push(format!("energy conservation 3D {} over T=0.1: max relative drift {drift3:.2e} (<= 1e-10)", label(f)));
    }
    let summary = if failed.is_empty() { "auxiliary and conserved-quantity rates: all within band".to_string() } else { format!("auxiliary and conserved-quantity rates: out of band: {}", failed.join(", ")) };
    Ok(Verdict::new(pass, summary).detail(details))
}

fn c7_helicity(min_ratio: &mut f64) -> Res<Verdict> {
    let t0 = Instant::now();
    let r = Reference::abc_reference_3d(0.0)?;
    let ns = vec![8, 12, 16, 24, 32];
    let ns_change = vec![8, 12, 16, 24];
    let mut pass = true;
    let mut parts = Vec::new();
    let mut details = Vec::new();
    for f in FAMILIES {
        let expect = r_rec(f).min(r_star(f));
        let (mut h, mut rate, mut change) = (Vec::new(), Vec::new(), Vec::new());
        for &n in &ns {
            let m = Arc::new(MeshFamily::new(f).build(&r, n)?);
            h.push(m.h());
            let ctx = FlowContext::new(m, Extrusion::DualCell)?;
            let v = ctx.leray.project_force(interpolate(ctx.mesh(), &r, 0.0))?;
            rate.push(ctx.helicity_rate(&v)?.abs());
            if ns_change.contains(&n) {
                let h0 = ctx.helicity(&v)?;
                let e0 = ctx.energy(&v);
                let s = ctx.run(&FlowState::new(v), 0.05, 10, &Viscosity::None, 1e-13, Stepper::ImplicitMidpoint)?;
                *min_ratio = min_ratio.min(ctx.energy(&s.v) / e0);
                change.push((ctx.helicity(&s.v)? - h0).abs());
            }
        }
        let t_rate = ConvergenceTable::new("|dH/dt|", f, ns.clone(), h.clone(), rate, 0.0);
        let t_change = ConvergenceTable::new("|H(0.5) - H(0)|", f, ns_change.clone(), h[..ns_change.len()].to_vec(), change, 0.0);
        let ok = within(t_rate.slope(), expect, 0.3) && within(t_change.slope(), expect, 0.3);
        pass &= ok;
        parts.push(format!("{} rate {} change {} (expect {expect} +- 0.3)", label(f), fmt_slope(t_rate.slope()), fmt_slope(t_change.slope())));
        details.push(table_line(&t_rate));
        details.push(table_line(&t_change));
    }
    let secs = t0.elapsed().as_secs_f64();
    Ok(Verdict::new(pass, format!("helicity drift on n x n x n/2 prisms: {}, {secs:.1} s", parts.join("; "))).detail(details))
}

fn c8_spectral() -> Res<Verdict> {
    let mut pass = true;
    let mut parts = Vec::new();
    let mut details = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    // Lowest continuum eigenvalue of both pencils on the 2pi-torus.
    let continuum = 1.0;
    for f in FAMILIES {
        let (mut lam, mut mu) = (Vec::new(), Vec::new());
        let mut worst_gap = f64::INFINITY;
        for n in [8, 16, 32] {
            let ctx = FlowContext::new(torus(n, f)?, Extrusion::DualCell)?;
            let m1 = ctx.leray.scalar_poincare_constant()?;
            lam.push(ctx.leray.poincare_constant()?);
            mu.push(m1);
            for _ in 0..20 {
                let mut q: Vec<f64> = (0..ctx.ops.n_cells()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let mean = ctx.ops.mean0(&q);
                q.iter_mut().for_each(|x| *x -= mean);
                worst_gap = worst_gap.min(ctx.leray.infsup_quotient(&q)? - (m1.sqrt() - 1e-9));
            }
        }
        let var = |v: &[f64]| {
            let (lo, hi) = (v.iter().copied().fold(f64::INFINITY, f64::min), v.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            (hi - lo) / hi
        };
        let (vl, vm) = (var(&lam), var(&mu));
        let floor = lam.iter().chain(&mu).copied().fold(f64::INFINITY, f64::min) / continuum;
        let ok = vl <= 0.2 && vm <= 0.2 && floor >= 0.5 && worst_gap >= 0.0;
        pass &= ok;
        parts.push(format!("{} variation lambda {vl:.3} mu {vm:.3}, min/continuum {floor:.3}", label(f)));
        details.push(format!("{} n=8,16,32: lambda_1 {lam:.6?}, mu_1 {mu:.6?}, min(quotient - (sqrt(mu_1) - 1e-9)) over 60 pressures {worst_gap:.3e}", label(f)));
    }
    Ok(Verdict::new(pass, format!("spectral uniformity (limit 20%, floor 0.5): {}", parts.join("; "))).detail(details))
}

fn c9_bounded() -> Res<Verdict> {
    let r = Reference::SquareNoSlip;
    let mut pass = true;
    let mut details = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut worst_rise, mut worst_div, mut worst_proj) = (f64::NEG_INFINITY, 0.0f64, 0.0f64);
    for f in FAMILIES {
        let m = Arc::new(build_square_dirichlet(16, f, if f == Family::Perturbed { 0.15 } else { 0.0 }, 1)?);
        let ctx = FlowContext::new(m.clone(), Extrusion::DualCell)?;
        let mut s = FlowState::new(ctx.leray.project_force(interpolate(&m, &r, 0.0))?);
        let visc = Viscosity::Isotropic { nu: 1e-2 };
        let mut e = ctx.energy(&s.v);
        let mut rise = f64::NEG_INFINITY;
        let mut div = ctx.divergence_residual(&s.v);
        for _ in 0..100 {
            s = ctx.advance(&s, 1e-2, &visc, 1e-13, Stepper::ImplicitMidpoint)?.0;
            let e1 = ctx.energy(&s.v);
            rise = rise.max(e1 - e);
            e = e1;
            div = div.max(ctx.divergence_residual(&s.v));
        }
        let wall = m.facet_boundary_mask();
        let mut proj = 0.0f64;
        for _ in 0..100 {
            let w: Vec<f64> = (0..m.n_facets()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let pw = ctx.leray.project_force(w.clone())?;
            let ppw = ctx.leray.project_force(pw.clone())?;
            let scale = ctx.ops.norm_l2h(&w);
            let idem = ctx.ops.norm_l2h(&pw.iter().zip(&ppw).map(|(a, b)| a - b).collect::<Vec<_>>()) / scale;
            let on_wall = pw.iter().zip(&wall).filter(|(_, b)| **b).map(|(v, _)| v.abs()).fold(0.0, f64::max);
            let contract = (ctx.ops.norm_l2h(&pw) - scale).max(0.0) / scale;
            proj = proj.max(idem).max(on_wall).max(contract).max(ctx.divergence_residual(&pw));
        }
        pass &= rise <= 0.0 && div <= 1e-9 && proj <= 1e-12;
        worst_rise = worst_rise.max(rise);
        worst_div = worst_div.max(div);
        worst_proj = worst_proj.max(proj);
        details.push(format!("square {} n=16, nu=1e-2, T=1: max step energy change {rise:.3e}, divergence {div:.2e}, projection identities {proj:.2e}", label(f)));
    }
    Ok(Verdict::new(pass, format!("no-slip square: max per-step energy change {worst_rise:.2e} (<= 0), divergence {worst_div:.2e} (<= 1e-9), V_h^0 projection identities {worst_proj:.2e} (<= 1e-12)")).detail(details))
}

fn c10_pressure() -> Res<Verdict> {
    let r = Reference::taylor_green_2d(0.0)?;
    let mut pass = true;
    let mut parts = Vec::new();
    let mut details = Vec::new();
    for f in FAMILIES {
        let mut errs = Vec::new();
        for n in [8, 16, 32, 64] {
            let m = torus(n, f)?;
            let ctx = FlowContext::new(m.clone(), Extrusion::DualCell)?;
            let v = ctx.leray.project_force(interpolate(&m, &r, 0.0))?;
            let p = ctx.leray.pressure_recover(&ctx.recon, &v, None, None)?;
            let exact = de_rham_0(&m, &|x| r.pressure(x, 0.0));
            let shift = ctx.ops.mean0(&exact) - ctx.ops.mean0(&p);
            let e: Vec<f64> = p.iter().zip(&exact).map(|(a, b)| a - b + shift).collect();
            errs.push(ctx.ops.norm_m0(&e));
        }
        let mono = errs.windows(2).all(|w| w[1] < w[0]);
        pass &= mono;
        parts.push(format!("{} {}", label(f), if mono { "monotone" } else { "not monotone" }));
        details.push(format!("{} n=8..64 pressure M0 error [{}]", label(f), errs.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>().join(", ")));
    }
    Ok(Verdict::new(pass, format!("steady Taylor-Green pressure error decreasing in n: {}", parts.join(", "))).detail(details))
}

fn c11_no_dissipation(min_ratio: f64) -> Verdict {
    Verdict::new(min_ratio >= 1.0 - 1e-9, format!("no anomalous dissipation: min E(t)/E(0) over all Euler runs {min_ratio:.15} (>= 1 - 1e-9)"))
}

fn main() {
    // The libtest flags passed by `cargo test` are ignored.
    let start = Instant::now();
    let mut min_ratio = 1.0f64;
    let mut results: Vec<(usize, Res<Verdict>)> = Vec::new();
    let mut run = |id: usize, f: &mut dyn FnMut() -> Res<Verdict>| {
        let t = Instant::now();
        let v = f();
        results.push((id, v));
        let (_, v) = results.last().unwrap();
        let secs = t.elapsed().as_secs_f64();
        match v {
            Ok(v) => {
                println!("criterion {id:>2} [{}] {} ({secs:.1} s)", if v.pass { "PASS" } else { "FAIL" }, v.summary);
                for d in &v.details {
                    println!("      {d}");
                }
            }
            Err(e) => println!("criterion {id:>2} [FAIL] error: {e} ({secs:.1} s)"),
        }
    };
    run(1, &mut c1_identities);
    run(2, &mut || c2_conservation(&mut min_ratio));
    run(3, &mut || c3_reversibility(&mut min_ratio));
    run(4, &mut c4_truncation);
    run(5, &mut c5_convergence);
    run(6, &mut c6_auxiliary);
    run(7, &mut || c7_helicity(&mut min_ratio));
    run(8, &mut c8_spectral);
    run(9, &mut c9_bounded);
    run(10, &mut c10_pressure);
    let r11 = c11_no_dissipation(min_ratio);
    run(11, &mut || Ok(Verdict::new(r11.pass, r11.summary.clone())));
    let passed = results.iter().filter(|(_, v)| v.as_ref().is_ok_and(|v| v.pass)).count();
    println!("acceptance: {passed}/{} criteria pass ({:.1} s)", results.len(), start.elapsed().as_secs_f64());
    if passed < results.len() && std::env::var_os("DVFLOW_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
