//! Randomized suite of the exact algebraic identities of the scheme.
//!
//! Each identity is evaluated on seeded random cochains and reported as
//! the largest scale-free residual over all trials.

use crate::dynamics::{FlowContext, Viscosity};
use crate::error::Result;
use crate::geom::vec3;
use crate::mesh::Mesh;
use crate::recon::Extrusion;
use crate::sparse::{self, dot};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Largest residual of one identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub trials: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub dim: usize,
    pub cells: usize,
    pub seed: u64,
    pub checks: Vec<IdentityCheck>,
}

impl InvariantReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.max_residual).fold(0.0, f64::max)
    }
}

struct Acc {
    checks: Vec<IdentityCheck>,
}

impl Acc {
    fn record(&mut self, name: &str, tolerance: f64, trials: usize, res: f64) {
        match self.checks.iter_mut().find(|c| c.name == name) {
            Some(c) => {
                c.max_residual = c.max_residual.max(res);
                c.trials += trials;
                c.passed = c.max_residual <= c.tolerance;
            }
            None => self.checks.push(IdentityCheck { name: name.to_string(), max_residual: res, tolerance, trials, passed: res <= tolerance }),
        }
    }
}

/// `|a| / s`, with `s = 0` mapped to `|a|`.
fn rel(a: f64, s: f64) -> f64 {
    if s > 0.0 {
        a.abs() / s
    } else {
        a.abs()
    }
}

fn random(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Run every identity `trials` times on `mesh`. Random 1-cochains are
/// masked to vanish on wall dual edges.
///
/// Tolerances: chain property exact, Kelvin 1e-11, everything else 1e-12.
pub fn run_invariant_suite(mesh: Arc<Mesh>, trials: usize, seed: u64) -> Result<InvariantReport> {
    let ctx = FlowContext::new(mesh, Extrusion::DualCell)?;
    let ops = &ctx.ops;
    let mesh = ctx.mesh();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = Acc { checks: Vec::new() };

    let mut bad = 0usize;
    for k in 0..mesh.incidence.len().saturating_sub(1) {
        bad += mesh.incidence[k + 1].integer_product_nonzeros(&mesh.incidence[k]);
    }
    acc.record("primal_chain_DD", 0.0, 1, bad as f64);
    let mut bad = ops.dt1.integer_product_nonzeros(&ops.dt0);
    if mesh.dim == 3 {
        bad += ops.dt2.integer_product_nonzeros(&ops.dt1);
    }
    acc.record("dual_chain_DD", 0.0, 1, bad as f64);

    let (nf, nr, nc) = (ops.n_facets(), ops.n_ridges(), ops.n_cells());
    let norm = |v: &[f64]| ops.norm_l2h(v);
    let visc = {
        let mut v = vec![Viscosity::Isotropic { nu: 0.3 }, Viscosity::Smagorinsky { cs: 0.17 }];
        if mesh.dim == 3 {
            v.push(Viscosity::Anisotropic { nu_h: 0.2, nu_v: 0.05 });
        }
        v
    };
    for _ in 0..trials {
        let (mut x, mut y, mut z) = (random(nf, &mut rng), random(nf, &mut rng), random(nf, &mut rng));
        for v in [&mut x, &mut y, &mut z] {
            ctx.leray.mask(v);
        }
        let r = ctx.recon.contraction(&x, &ops.curl(&x))?;
        acc.record("energy_identity", 1e-12, 1, rel(ops.inner(1, &x, &r), norm(&x) * norm(&r)));

        // Each term is scaled by its Cauchy-Schwarz bound |a| |Q(b, c)|, the
        // size of its rounding error.
        let phi = |a: &[f64], b: &[f64], c: &[f64]| -> Result<(f64, f64)> {
            let q = ctx.recon.lamb(b, c)?;
            Ok((ops.inner(1, a, &q), norm(a) * norm(&q)))
        };
        let sum_rel = |terms: &[(f64, f64)]| rel(terms.iter().map(|t| t.0).sum(), terms.iter().map(|t| t.1).sum());
        let six = [phi(&x, &y, &z)?, phi(&x, &z, &y)?, phi(&y, &x, &z)?, phi(&y, &z, &x)?, phi(&z, &x, &y)?, phi(&z, &y, &x)?];
        acc.record("polarised_6_term", 1e-12, 1, sum_rel(&six));
        let three = [phi(&x, &x, &y)?, phi(&x, &y, &x)?, phi(&y, &x, &x)?];
        acc.record("polarised_3_term", 1e-12, 1, sum_rel(&three));

        let q = random(nc, &mut rng);
        let g = ops.grad(&q);
        let lhs = ops.inner(1, &g, &y);
        let rhs = -dot(&q, &ops.divergence(&y));
        acc.record("summation_by_parts", 1e-12, 1, rel(lhs - rhs, norm(&g) * norm(&y)));

        let px = ctx.leray.project(&x)?;
        let ppx = ctx.leray.project(&px)?;
        acc.record("leray_idempotent", 1e-12, 1, rel(norm(&sub(&ppx, &px)), norm(&x)));
        let py = ctx.leray.project(&y)?;
        acc.record("leray_self_adjoint", 1e-12, 1, rel(ops.inner(1, &px, &y) - ops.inner(1, &x, &py), norm(&x) * norm(&y)));
        acc.record("leray_contractive", 1e-12, 1, (norm(&px) - norm(&x)).max(0.0) / norm(&x));
        acc.record("leray_divergence_free", 1e-12, 1, rel(sparse::max_abs(&ops.divergence(&px)), sparse::max_abs(&ops.divergence(&x))));

        let f = ctx.euler_rhs(&px)?;
        acc.record("euler_rhs_energy", 1e-12, 1, rel(ops.inner(1, &px, &f), norm(&px) * norm(&f)));

        let gamma = ops.dt1.transpose_matvec(&random(nr, &mut rng));
        let v = random(nf, &mut rng);
        let lamb = ctx.recon.lamb(&v, &v)?;
        let lie = ctx.recon.chain_lie(&v, &gamma)?;
        let e2 = |a: &[f64]| dot(a, a).sqrt();
        let scale = e2(&lamb) * e2(&gamma) + e2(&v) * e2(&lie);
        acc.record("kelvin_identity", 1e-11, 1, rel(dot(&v, &lie) - dot(&lamb, &gamma), scale));

        for vk in &visc {
            let fv = ctx.viscous_force(vk, &x)?;
            let name = match vk {
                Viscosity::Isotropic { .. } => "viscous_V1_isotropic",
                Viscosity::Smagorinsky { .. } => "viscous_V1_smagorinsky",
                _ => "viscous_V1_anisotropic",
            };
            acc.record(name, 1e-12, 1, ops.inner(1, &x, &fv).max(0.0) / (norm(&x) * norm(&fv)).max(f64::MIN_POSITIVE));
        }
        let s = Viscosity::Smagorinsky { cs: 0.17 };
        let d = sub(&ctx.viscous_force(&s, &x)?, &ctx.viscous_force(&s, &y)?);
        let xy = sub(&x, &y);
        acc.record("smagorinsky_monotone", 1e-12, 1, ops.inner(1, &xy, &d).max(0.0) / (norm(&xy) * norm(&d)).max(f64::MIN_POSITIVE));
    }
    if mesh.dim == 2 && mesh.is_periodic() {
        let k = vec3(0.3, -0.7, 0.0);
        let c = crate::dec::de_rham_1(mesh, &|_| k);
        let rec = ctx.recon.reconstruct_velocity(&c)?;
        acc.record("reconstruction_exact_on_constants", 1e-12, 1, rec.iter().map(|u| (u - k).norm()).fold(0.0, f64::max));
    }
    Ok(InvariantReport { dim: mesh.dim, cells: mesh.n_cells(), seed, checks: acc.checks })
}
