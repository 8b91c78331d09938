//! Semi-discrete Euler and Navier–Stokes dynamics on `V_h`:
//! `dv/dt = P_h(-Q(v, v) + f_visc(v))`, integrated by the implicit
//! midpoint rule, with materially advected dual 1-cycles and invariant
//! diagnostics.

use crate::dec::Operators;
use crate::error::{check_len, Error, Result};
use crate::helicity::HelicityQuadrature;
use crate::leray::LerayContext;
use crate::mesh::Mesh;
use crate::recon::{Extrusion, ReconstructionContext};
use crate::sparse;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Fixed-point iteration budget of one implicit midpoint step.
pub const MAX_FIXED_POINT_ITERATIONS: usize = 50;
/// Number of times a rejected step is halved before giving up.
pub const MAX_STEP_HALVINGS: usize = 5;

/// Viscous closure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Viscosity {
    None,
    Isotropic { nu: f64 },
    /// Horizontal/vertical split on prismatic complexes.
    Anisotropic { nu_h: f64, nu_v: f64 },
    /// Vorticity-based Smagorinsky eddy viscosity.
    Smagorinsky { cs: f64 },
}

impl Viscosity {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &'static str, x: f64| {
            if x.is_finite() && x >= 0.0 {
                Ok(())
            } else {
                Err(Error::arg(name, "must be finite and nonnegative"))
            }
        };
        match *self {
            Viscosity::None => Ok(()),
            Viscosity::Isotropic { nu } => check("nu", nu),
            Viscosity::Anisotropic { nu_h, nu_v } => check("nu_h", nu_h).and(check("nu_v", nu_v)),
            Viscosity::Smagorinsky { cs } => check("cs", cs),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Viscosity::None | Viscosity::Isotropic { nu: 0.0 })
    }
}

/// Time stepper.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stepper {
    ImplicitMidpoint,
    /// Explicit Euler; not symmetric, used to contrast time reversibility.
    ForwardEuler,
}

/// All precomputed operators of one complex.
#[derive(Debug)]
pub struct FlowContext {
    pub ops: Arc<Operators>,
    pub recon: ReconstructionContext,
    pub leray: LerayContext,
    pub helicity: Option<HelicityQuadrature>,
    /// Smagorinsky length scale per dual face, `sqrt(A*_k)`.
    pub smagorinsky_scale: Vec<f64>,
}

impl FlowContext {
    pub fn new(mesh: Arc<Mesh>, scheme: Extrusion) -> Result<Self> {
        let ops = Arc::new(crate::dec::assemble_operators(mesh.clone())?);
        let recon = ReconstructionContext::new(ops.clone(), scheme)?;
        let leray = LerayContext::new(ops.clone())?;
        let helicity = if mesh.dim == 3 { Some(HelicityQuadrature::new(&mesh)?) } else { None };
        let smagorinsky_scale = mesh.ridges.iter().map(|r| r.dual_area.sqrt()).collect();
        Ok(FlowContext { ops, recon, leray, helicity, smagorinsky_scale })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.ops.mesh
    }

    /// Euler right-hand side `f_h(v) = -P_h Q(v, v)`.
    pub fn euler_rhs(&self, v: &[f64]) -> Result<Vec<f64>> {
        let q = self.recon.lamb(v, v)?;
        self.leray.project_force(q.into_iter().map(|x| -x).collect())
    }

    /// Full right-hand side `P_h(-Q(v, v) + f_visc(v))`.
    pub fn rhs(&self, v: &[f64], visc: &Viscosity) -> Result<Vec<f64>> {
        let mut g: Vec<f64> = self.recon.lamb(v, v)?.into_iter().map(|x| -x).collect();
        if !visc.is_none() {
            let f = self.viscous_force(visc, v)?;
            g.iter_mut().zip(f).for_each(|(g, f)| *g += f);
        }
        self.leray.project_force(g)
    }

    /// Viscous force of the given closure.
    pub fn viscous_force(&self, visc: &Viscosity, v: &[f64]) -> Result<Vec<f64>> {
        visc.validate()?;
        let ops = &self.ops;
        check_len(ops.n_facets(), v.len())?;
        let w = ops.curl(v);
        let weighted = |weights: Vec<f64>| -> Vec<f64> {
            let mw: Vec<f64> = w.iter().zip(&weights).zip(&ops.m2).map(|((w, a), m)| w * a * m).collect();
            ops.dt1.transpose_matvec(&mw).iter().zip(&ops.m1).map(|(x, m)| -x / m).collect()
        };
        Ok(match *visc {
            Viscosity::None => vec![0.0; v.len()],
            Viscosity::Isotropic { nu } => weighted(vec![nu; w.len()]),
            Viscosity::Anisotropic { nu_h, nu_v } => {
                if self.mesh().dim != 3 {
                    return Err(Error::Unsupported("anisotropic viscosity needs a prismatic complex".into()));
                }
                let weights = self.mesh().ridges.iter().map(|r| if r.tangent.z.abs() > 0.5 { nu_h } else { nu_v }).collect();
                let mut f = weighted(weights);
                let mv: Vec<f64> = v.iter().zip(&ops.m1).map(|(a, m)| a * m).collect();
                let d: Vec<f64> = ops.dt0.transpose_matvec(&mv).iter().zip(&ops.m0).map(|(x, m)| x / m).collect();
                let g = ops.grad(&d);
                f.iter_mut().zip(g).for_each(|(f, g)| *f -= nu_h * g);
                f
            }
            Viscosity::Smagorinsky { cs } => {
                let weights = self.smagorinsky_viscosity(cs, &w);
                weighted(weights)
            }
        })
    }

    /// Eddy viscosity per dual face, `(cs l_k)^2 |w_k| / A*_k`.
    pub fn smagorinsky_viscosity(&self, cs: f64, w: &[f64]) -> Vec<f64> {
        let mesh = self.mesh();
        w.iter().zip(&self.smagorinsky_scale).zip(&mesh.ridges).map(|((w, l), r)| (cs * l).powi(2) * w.abs() / r.dual_area).collect()
    }

    pub fn energy(&self, v: &[f64]) -> f64 {
        0.5 * self.ops.inner(1, v, v)
    }

    pub fn enstrophy(&self, v: &[f64]) -> f64 {
        self.ops.norm_m2(&self.ops.curl(v)).powi(2)
    }

    /// `max |D_top M1 v| / max(|v|, tiny)`.
    pub fn divergence_residual(&self, v: &[f64]) -> f64 {
        sparse::max_abs(&self.ops.divergence(v)) / sparse::max_abs(v).max(f64::MIN_POSITIVE)
    }

    pub fn helicity(&self, v: &[f64]) -> Result<f64> {
        let q = self.helicity.as_ref().ok_or_else(|| Error::Unsupported("helicity needs a 3D complex".into()))?;
        q.bilinear(&self.ops, &self.recon, v, v)
    }

    /// `dH/dt` along the Euler flow, by the chain rule on the quadratic form.
    pub fn helicity_rate(&self, v: &[f64]) -> Result<f64> {
        let q = self.helicity.as_ref().ok_or_else(|| Error::Unsupported("helicity needs a 3D complex".into()))?;
        let f = self.euler_rhs(v)?;
        Ok(q.bilinear(&self.ops, &self.recon, v, &f)? + q.bilinear(&self.ops, &self.recon, &f, v)?)
    }

    /// Boundary of the union of the dual faces whose ridges lie within
    /// `radius` of `centre` (periodic distance): a closed dual 1-cycle.
    pub fn loop_around(&self, centre: &crate::geom::Vec3, radius: f64) -> Vec<f64> {
        let mesh = self.mesh();
        let ext = mesh.extent();
        let z: Vec<f64> = mesh
            .ridges
            .iter()
            .map(|r| {
                let mut d = r.pos - centre;
                if mesh.is_periodic() {
                    for c in 0..mesh.dim {
                        d[c] -= ext[c] * (d[c] / ext[c]).round();
                    }
                }
                if d.norm() < radius {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        self.ops.dt1.transpose_matvec(&z)
    }

    /// Instantaneous Kelvin residual `f_h(v) . gamma + v . L^chain_v gamma`.
    pub fn kelvin_residual(&self, v: &[f64], gamma: &[f64]) -> Result<f64> {
        let f = self.euler_rhs(v)?;
        let l = self.recon.chain_lie(v, gamma)?;
        Ok(sparse::dot(&f, gamma) + sparse::dot(v, &l))
    }
}

/// Velocity state with optional advected loops.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub v: Vec<f64>,
    pub loops: Vec<Vec<f64>>,
}

impl FlowState {
    pub fn new(v: Vec<f64>) -> Self {
        FlowState { t: 0.0, v, loops: Vec::new() }
    }

    /// Register a loop; it must be a cycle.
    pub fn with_loop(mut self, ctx: &FlowContext, gamma: Vec<f64>) -> Result<Self> {
        check_len(ctx.ops.n_facets(), gamma.len())?;
        let b = sparse::max_abs(&ctx.recon.chain_boundary(&gamma));
        if b > 1e-12 * sparse::max_abs(&gamma).max(1.0) {
            return Err(Error::arg("loop", format!("not a cycle (|boundary| = {b:.3e})")));
        }
        self.loops.push(gamma);
        Ok(self)
    }

    pub fn circulations(&self) -> Vec<f64> {
        self.loops.iter().map(|g| sparse::dot(&self.v, g)).collect()
    }
}

/// Outcome of one accepted step.
#[derive(Clone, Debug)]
pub struct StepReport {
    pub iterations: usize,
    pub residual: f64,
    /// `E+ - E + dt nu |D~1 v_mid|^2_{M2}` (isotropic), else `E+ - E - dt <v_mid, f(v_mid)>`.
    pub energy_balance: f64,
}

fn rel_diff(a: &[f64], b: &[f64], scale: f64) -> f64 {
    sparse::max_abs(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>()) / scale
}

impl FlowContext {
    fn loop_rhs(&self, v: &[f64], loops: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        loops.iter().map(|g| self.recon.chain_lie(v, g)).collect()
    }

    /// One implicit midpoint step `v+ = v + dt f((v + v+)/2)` solved by
    /// fixed-point iteration to relative tolerance `tol`; loops are advanced
    /// by the same rule with the midpoint velocity.
    pub fn step_implicit_midpoint(&self, state: &FlowState, dt: f64, visc: &Viscosity, tol: f64) -> Result<(FlowState, StepReport)> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::arg("dt", "must be positive"));
        }
        if !(tol >= 1e-14) {
            return Err(Error::arg("tol", "must be at least 1e-14"));
        }
        let v0 = &state.v;
        let scale = sparse::max_abs(v0).max(f64::MIN_POSITIVE);
        let f0 = self.rhs(v0, visc)?;
        let mut v1: Vec<f64> = v0.iter().zip(&f0).map(|(v, f)| v + dt * f).collect();
        let mut g1 = state.loops.clone();
        let mut residual = f64::INFINITY;
        let mut last = f64::INFINITY;
        for it in 1..=MAX_FIXED_POINT_ITERATIONS {
            let vm: Vec<f64> = v0.iter().zip(&v1).map(|(a, b)| 0.5 * (a + b)).collect();
            let gm: Vec<Vec<f64>> = state.loops.iter().zip(&g1).map(|(a, b)| a.iter().zip(b).map(|(a, b)| 0.5 * (a + b)).collect()).collect();
            let f = self.rhs(&vm, visc)?;
            let next: Vec<f64> = v0.iter().zip(&f).map(|(v, f)| v + dt * f).collect();
            let lg = self.loop_rhs(&vm, &gm)?;
            let gnext: Vec<Vec<f64>> = state.loops.iter().zip(&lg).map(|(g, l)| g.iter().zip(l).map(|(g, l)| g + dt * l).collect()).collect();
            residual = rel_diff(&next, &v1, scale);
            for (a, b) in gnext.iter().zip(&g1) {
                residual = residual.max(rel_diff(a, b, sparse::max_abs(a).max(1.0)));
            }
            v1 = next;
            g1 = gnext;
            if !residual.is_finite() {
                break;
            }
            if residual <= tol {
                let vm: Vec<f64> = v0.iter().zip(&v1).map(|(a, b)| 0.5 * (a + b)).collect();
                let de = self.energy(&v1) - self.energy(v0);
                let balance = match visc {
                    Viscosity::Isotropic { nu } => de + dt * nu * self.enstrophy(&vm),
                    Viscosity::None => de,
                    _ => de - dt * self.ops.inner(1, &vm, &self.rhs(&vm, visc)?),
                };
                let next = FlowState { t: state.t + dt, v: v1, loops: g1 };
                return Ok((next, StepReport { iterations: it, residual, energy_balance: balance }));
            }
            if it > 3 && residual > last {
                break;
            }
            last = residual;
        }
        Err(Error::StepRejected { t: state.t, reason: format!("fixed-point residual {residual:.3e} above {tol:.1e}"), suggested_dt: 0.5 * dt })
    }

    /// One explicit Euler step.
    pub fn step_forward_euler(&self, state: &FlowState, dt: f64, visc: &Viscosity) -> Result<FlowState> {
        let f = self.rhs(&state.v, visc)?;
        let lg = self.loop_rhs(&state.v, &state.loops)?;
        let v = state.v.iter().zip(&f).map(|(v, f)| v + dt * f).collect();
        let loops = state.loops.iter().zip(&lg).map(|(g, l)| g.iter().zip(l).map(|(g, l)| g + dt * l).collect()).collect();
        Ok(FlowState { t: state.t + dt, v, loops })
    }

    /// Advance by `dt`, halving on rejection at most [`MAX_STEP_HALVINGS`] times.
    pub fn advance(&self, state: &FlowState, dt: f64, visc: &Viscosity, tol: f64, stepper: Stepper) -> Result<(FlowState, Vec<StepReport>)> {
        self.advance_depth(state, dt, visc, tol, stepper, 0)
    }

    fn advance_depth(&self, state: &FlowState, dt: f64, visc: &Viscosity, tol: f64, stepper: Stepper, depth: usize) -> Result<(FlowState, Vec<StepReport>)> {
        match stepper {
            Stepper::ForwardEuler => Ok((self.step_forward_euler(state, dt, visc)?, Vec::new())),
            Stepper::ImplicitMidpoint => match self.step_implicit_midpoint(state, dt, visc, tol) {
                Ok((s, r)) => Ok((s, vec![r])),
                Err(Error::StepRejected { .. }) if depth < MAX_STEP_HALVINGS => {
                    let (mid, mut r1) = self.advance_depth(state, 0.5 * dt, visc, tol, stepper, depth + 1)?;
                    let (end, r2) = self.advance_depth(&mid, 0.5 * dt, visc, tol, stepper, depth + 1)?;
                    r1.extend(r2);
                    Ok((end, r1))
                }
                Err(e) => Err(e),
            },
        }
    }

    /// Integrate `n_steps` steps of size `dt`.
    pub fn run(&self, state: &FlowState, dt: f64, n_steps: usize, visc: &Viscosity, tol: f64, stepper: Stepper) -> Result<FlowState> {
        let mut s = state.clone();
        for _ in 0..n_steps {
            s = self.advance(&s, dt, visc, tol, stepper)?.0;
        }
        Ok(s)
    }

    /// Integrate to `t_end`, map `v -> -v`, integrate again, map back and
    /// return `|v_final - v0|_{L2h} / |v0|_{L2h}` (Euler only).
    pub fn time_reverse_check(&self, v0: &[f64], t_end: f64, dt: f64, tol: f64, stepper: Stepper) -> Result<f64> {
        if !(t_end >= 0.0) {
            return Err(Error::arg("t_end", "must be nonnegative"));
        }
        let n = (t_end / dt).round() as usize;
        let s = FlowState::new(v0.to_vec());
        let fwd = self.run(&s, dt, n, &Viscosity::None, tol, stepper)?;
        let back = FlowState::new(fwd.v.iter().map(|x| -x).collect());
        let ret = self.run(&back, dt, n, &Viscosity::None, tol, stepper)?;
        let diff: Vec<f64> = ret.v.iter().zip(v0).map(|(a, b)| -a - b).collect();
        Ok(self.ops.norm_l2h(&diff) / self.ops.norm_l2h(v0).max(f64::MIN_POSITIVE))
    }

    /// Diagnostic record of a state.
    pub fn diagnostics(&self, state: &FlowState) -> Result<Diagnostics> {
        let v = &state.v;
        let helicity = if self.mesh().dim == 3 { Some(self.helicity(v)?) } else { None };
        let kelvin = state.loops.iter().map(|g| self.kelvin_residual(v, g)).collect::<Result<Vec<_>>>()?;
        Ok(Diagnostics {
            t: state.t,
            energy: self.energy(v),
            enstrophy: self.enstrophy(v),
            divergence: self.divergence_residual(v),
            helicity,
            circulations: state.circulations(),
            kelvin_residuals: kelvin,
            harmonic: self.leray.harmonic_components(v),
        })
    }
}

/// One diagnostic sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub t: f64,
    pub energy: f64,
    pub enstrophy: f64,
    pub divergence: f64,
    pub helicity: Option<f64>,
    pub circulations: Vec<f64>,
    pub kelvin_residuals: Vec<f64>,
    pub harmonic: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dec::de_rham_1;
    use crate::geom::vec3;
    use crate::mesh::{build_square_dirichlet, build_torus_mesh, extrude_prismatic, Family};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn torus(n: usize, fam: Family) -> FlowContext {
        FlowContext::new(Arc::new(build_torus_mesh(n, fam, 0.2, 1).unwrap()), Extrusion::DualCell).unwrap()
    }

    fn random_vh(c: &FlowContext, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let w: Vec<f64> = (0..c.ops.n_facets()).map(|_| rng.random_range(-1.0..1.0)).collect();
        c.leray.project_force(w).unwrap()
    }

    fn prism() -> FlowContext {
        let tau = 2.0 * std::f64::consts::PI;
        let layer = build_torus_mesh(6, Family::Perturbed, 0.2, 3).unwrap();
        FlowContext::new(Arc::new(extrude_prismatic(&layer, 3, &[tau / 3.0]).unwrap()), Extrusion::DualCell).unwrap()
    }

    #[test]
    fn semi_discrete_energy_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for c in [torus(8, Family::Perturbed), prism()] {
            for _ in 0..10 {
                let v = random_vh(&c, &mut rng);
                let f = c.euler_rhs(&v).unwrap();
                let s = c.ops.norm_l2h(&v) * c.ops.norm_l2h(&f);
                assert!(c.ops.inner(1, &v, &f).abs() <= 1e-12 * s);
                let nu = 0.03;
                let g = c.rhs(&v, &Viscosity::Isotropic { nu }).unwrap();
                let lhs = c.ops.inner(1, &v, &g);
                let rhs = -nu * c.enstrophy(&v);
                assert!((lhs - rhs).abs() <= 1e-12 * (s + rhs.abs()));
                let lie: Vec<f64> = c.recon.lie_1form(&v, &v).unwrap().into_iter().map(|x| -x).collect();
                let a = c.leray.project_force(lie).unwrap();
                assert!(a.iter().zip(&f).all(|(a, b)| (a - b).abs() <= 1e-12 * sparse::max_abs(&f)));
            }
            for h in c.leray.harmonic_basis() {
                assert!(sparse::max_abs(&c.euler_rhs(h).unwrap()) < 1e-11);
            }
        }
    }

    #[test]
    fn viscous_axioms() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for c in [torus(8, Family::Perturbed), prism()] {
            let mut kinds = vec![Viscosity::Isotropic { nu: 0.1 }, Viscosity::Smagorinsky { cs: 0.2 }];
            if c.mesh().dim == 3 {
                kinds.push(Viscosity::Anisotropic { nu_h: 0.1, nu_v: 0.01 });
            } else {
                assert!(c.viscous_force(&Viscosity::Anisotropic { nu_h: 0.1, nu_v: 0.01 }, &vec![0.0; c.ops.n_facets()]).is_err());
            }
            for k in kinds {
                for _ in 0..20 {
                    let n = c.ops.n_facets();
                    let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let w: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let fv = c.viscous_force(&k, &v).unwrap();
                    let fw = c.viscous_force(&k, &w).unwrap();
                    let s = c.ops.norm_l2h(&v) * c.ops.norm_l2h(&fv);
                    assert!(c.ops.inner(1, &v, &fv) <= 1e-12 * s);
                    let d: Vec<f64> = v.iter().zip(&w).map(|(a, b)| a - b).collect();
                    let df: Vec<f64> = fv.iter().zip(&fw).map(|(a, b)| a - b).collect();
                    assert!(c.ops.inner(1, &d, &df) <= 1e-12 * c.ops.norm_l2h(&d) * c.ops.norm_l2h(&df));
                }
            }
        }
        assert!(Viscosity::Isotropic { nu: -1.0 }.validate().is_err());
    }

    #[test]
    fn midpoint_conserves_energy_and_circulation() {
        let c = torus(8, Family::Perturbed);
        let v0 = c.leray.project(&de_rham_1(c.mesh(), &|x| vec3(x.x.sin() * x.y.cos() + 0.3 * x.y.cos(), -x.x.cos() * x.y.sin(), 0.0))).unwrap();
        let gamma = c.loop_around(&vec3(1.0, 2.0, 0.0), 1.2);
        let s0 = FlowState::new(v0).with_loop(&c, gamma).unwrap();
        let d0 = c.diagnostics(&s0).unwrap();
        let s = c.run(&s0, 0.02, 10, &Viscosity::None, 1e-13, Stepper::ImplicitMidpoint).unwrap();
        let d = c.diagnostics(&s).unwrap();
        assert!(((d.energy - d0.energy) / d0.energy).abs() < 1e-11);
        assert!((d.circulations[0] - d0.circulations[0]).abs() < 1e-10);
        assert!(sparse::max_abs(&c.recon.chain_boundary(&s.loops[0])) < 1e-10);
        assert!(d.divergence < 1e-9);
        assert!(d.kelvin_residuals[0].abs() < 1e-10);

        let visc = Viscosity::Isotropic { nu: 0.05 };
        let (_, r) = c.step_implicit_midpoint(&s0, 0.02, &visc, 1e-13).unwrap();
        assert!(r.energy_balance.abs() < 1e-12 * d0.energy);
    }

    #[test]
    fn time_reversal_and_trivial_cases() {
        let c = torus(8, Family::Perturbed);
        let v0 = c.leray.project(&de_rham_1(c.mesh(), &|x| vec3(x.x.sin() * x.y.cos() + 0.3 * x.y.cos(), -x.x.cos() * x.y.sin(), 0.0))).unwrap();
        assert_eq!(c.time_reverse_check(&v0, 0.0, 0.01, 1e-13, Stepper::ImplicitMidpoint).unwrap(), 0.0);
        let e = c.time_reverse_check(&v0, 0.1, 0.01, 1e-13, Stepper::ImplicitMidpoint).unwrap();
        assert!(e < 1e-9, "{e}");
        let z = FlowState::new(vec![0.0; c.ops.n_facets()]);
        let d = c.diagnostics(&z).unwrap();
        assert_eq!((d.energy, d.enstrophy, d.divergence), (0.0, 0.0, 0.0));
        assert!(c.helicity(&z.v).is_err());
        assert!(FlowState::new(z.v.clone()).with_loop(&c, vec![1.0; c.ops.n_facets()]).is_err());
    }

    #[test]
    fn walls_dissipate() {
        let c = FlowContext::new(Arc::new(build_square_dirichlet(8, Family::Perturbed, 0.2, 2).unwrap()), Extrusion::DualCell).unwrap();
        let mut w = de_rham_1(c.mesh(), &|x| {
            let (s, t) = (x.x.sin(), x.y.sin());
            vec3(2.0 * s * s * t * x.y.cos(), -2.0 * t * t * s * x.x.cos(), 0.0)
        });
        c.leray.mask(&mut w);
        let mut s = FlowState::new(c.leray.project(&w).unwrap());
        let visc = Viscosity::Isotropic { nu: 1e-2 };
        let mut e = c.energy(&s.v);
        for _ in 0..5 {
            s = c.advance(&s, 0.05, &visc, 1e-13, Stepper::ImplicitMidpoint).unwrap().0;
            let e1 = c.energy(&s.v);
            assert!(e1 <= e);
            e = e1;
            assert!(c.divergence_residual(&s.v) < 1e-9);
        }
    }
}
