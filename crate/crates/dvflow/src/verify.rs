//! Reference solutions, truncation errors, error norms, rate fits and
//! convergence studies.

use crate::dec::{de_rham_1, Operators};
use crate::dynamics::{FlowContext, FlowState, Stepper, Viscosity};
use crate::error::{check_len, Error, Result};
use crate::geom::{self, vec3, Mat3, Vec3};
use crate::mesh::{build_square_dirichlet, build_torus_mesh, extrude_prismatic, Family, Mesh};
use crate::recon::Extrusion;
use crate::sparse;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Analytic velocity fields with closed-form derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Reference {
    /// `u = e^{-2 nu t} (sin x cos y, -cos x sin y)` on the 2pi-torus;
    /// steady for `nu = 0`.
    TaylorGreen { nu: f64 },
    /// Taylor–Green advected by a uniform stream `(u0, 0)`.
    MeanFlowTaylorGreen { nu: f64, u0: f64 },
    /// ABC Beltrami flow `curl u = u` decaying as `e^{-nu t}` on the 2pi-torus.
    Abc { nu: f64, a: f64, b: f64, c: f64 },
    /// Constant field; every discrete operator is exact on it.
    Uniform { u: [f64; 3] },
    /// No-slip field `u = curl(sin^2 x sin^2 y)` on `[0, pi]^2`. Initial
    /// data only; not a solution.
    SquareNoSlip,
}

impl Reference {
    pub fn taylor_green_2d(nu: f64) -> Result<Self> {
        check_nu(nu)?;
        Ok(Reference::TaylorGreen { nu })
    }

    pub fn abc_reference_3d(nu: f64) -> Result<Self> {
        check_nu(nu)?;
        Ok(Reference::Abc { nu, a: 1.0, b: 1.0, c: 1.0 })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Reference::TaylorGreen { .. } => "tg2d",
            Reference::MeanFlowTaylorGreen { .. } => "tg2d-mean",
            Reference::Abc { .. } => "abc3d",
            Reference::Uniform { .. } => "uniform",
            Reference::SquareNoSlip => "square-noslip",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Reference::Abc { .. } => 3,
            _ => 2,
        }
    }

    pub fn nu(&self) -> f64 {
        match *self {
            Reference::TaylorGreen { nu } | Reference::MeanFlowTaylorGreen { nu, .. } | Reference::Abc { nu, .. } => nu,
            _ => 0.0,
        }
    }

    /// Whether the field solves the Euler/NS equations.
    pub fn is_solution(&self) -> bool {
        !matches!(self, Reference::SquareNoSlip)
    }

    pub fn velocity(&self, x: &Vec3, t: f64) -> Vec3 {
        match *self {
            Reference::TaylorGreen { nu } => (-2.0 * nu * t).exp() * vec3(x.x.sin() * x.y.cos(), -x.x.cos() * x.y.sin(), 0.0),
            Reference::MeanFlowTaylorGreen { nu, u0 } => {
                let s = x.x - u0 * t;
                vec3(u0, 0.0, 0.0) + (-2.0 * nu * t).exp() * vec3(s.sin() * x.y.cos(), -s.cos() * x.y.sin(), 0.0)
            }
            Reference::Abc { nu, a, b, c } => (-nu * t).exp() * vec3(a * x.z.sin() + c * x.y.cos(), b * x.x.sin() + a * x.z.cos(), c * x.y.sin() + b * x.x.cos()),
            Reference::Uniform { u } => vec3(u[0], u[1], u[2]),
            Reference::SquareNoSlip => {
                let (sx, cx, sy, cy) = (x.x.sin(), x.x.cos(), x.y.sin(), x.y.cos());
                vec3(2.0 * sx * sx * sy * cy, -2.0 * sy * sy * sx * cx, 0.0)
            }
        }
    }

    /// `grad u` with entries `[i][j] = d u_i / d x_j`.
    pub fn gradient(&self, x: &Vec3, t: f64) -> Mat3 {
        match *self {
            Reference::TaylorGreen { nu } => {
                let e = (-2.0 * nu * t).exp();
                let (sx, cx, sy, cy) = (x.x.sin(), x.x.cos(), x.y.sin(), x.y.cos());
                e * Mat3::new(cx * cy, -sx * sy, 0.0, sx * sy, -cx * cy, 0.0, 0.0, 0.0, 0.0)
            }
            Reference::MeanFlowTaylorGreen { nu, u0 } => Reference::TaylorGreen { nu }.gradient(&vec3(x.x - u0 * t, x.y, x.z), t),
            Reference::Abc { nu, a, b, c } => {
                let e = (-nu * t).exp();
                e * Mat3::new(0.0, -c * x.y.sin(), a * x.z.cos(), b * x.x.cos(), 0.0, -a * x.z.sin(), -b * x.x.sin(), c * x.y.cos(), 0.0)
            }
            Reference::Uniform { .. } => Mat3::zeros(),
            Reference::SquareNoSlip => {
                let (sx, cx, sy, cy) = (x.x.sin(), x.x.cos(), x.y.sin(), x.y.cos());
                let (s2x, c2x, s2y, c2y) = ((2.0 * x.x).sin(), (2.0 * x.x).cos(), (2.0 * x.y).sin(), (2.0 * x.y).cos());
                Mat3::new(2.0 * s2x * sy * cy, 2.0 * sx * sx * c2y, 0.0, -2.0 * sy * sy * c2x, -2.0 * s2y * sx * cx, 0.0, 0.0, 0.0, 0.0)
            }
        }
    }

    pub fn vorticity(&self, x: &Vec3, t: f64) -> Vec3 {
        let g = self.gradient(x, t);
        vec3(g[(2, 1)] - g[(1, 2)], g[(0, 2)] - g[(2, 0)], g[(1, 0)] - g[(0, 1)])
    }

    /// Vector Laplacian of `u`.
    pub fn laplacian(&self, x: &Vec3, t: f64) -> Vec3 {
        match *self {
            Reference::TaylorGreen { .. } | Reference::MeanFlowTaylorGreen { .. } => {
                let u = self.velocity(x, t);
                let mean = if let Reference::MeanFlowTaylorGreen { u0, .. } = *self { vec3(u0, 0.0, 0.0) } else { Vec3::zeros() };
                -2.0 * (u - mean)
            }
            Reference::Abc { .. } => -self.velocity(x, t),
            Reference::Uniform { .. } => Vec3::zeros(),
            Reference::SquareNoSlip => Vec3::from_fn(|i, _| {
                let h = 1e-4;
                let mut s = 0.0;
                for d in 0..2 {
                    let mut e = Vec3::zeros();
                    e[d] = h;
                    s += (self.velocity(&(x + e), t)[i] - 2.0 * self.velocity(x, t)[i] + self.velocity(&(x - e), t)[i]) / (h * h);
                }
                s
            }),
        }
    }

    /// Analytic `du/dt`.
    pub fn time_derivative(&self, x: &Vec3, t: f64) -> Vec3 {
        match *self {
            Reference::TaylorGreen { nu } => -2.0 * nu * self.velocity(x, t),
            Reference::MeanFlowTaylorGreen { nu, u0 } => {
                let g = self.gradient(x, t);
                let tg = self.velocity(x, t) - vec3(u0, 0.0, 0.0);
                -2.0 * nu * tg - u0 * g.column(0).into_owned()
            }
            Reference::Abc { nu, .. } => -nu * self.velocity(x, t),
            Reference::Uniform { .. } | Reference::SquareNoSlip => Vec3::zeros(),
        }
    }

    /// Kinematic pressure.
    pub fn pressure(&self, x: &Vec3, t: f64) -> f64 {
        match *self {
            Reference::TaylorGreen { nu } => 0.25 * (-4.0 * nu * t).exp() * ((2.0 * x.x).cos() + (2.0 * x.y).cos()),
            Reference::MeanFlowTaylorGreen { nu, u0 } => Reference::TaylorGreen { nu }.pressure(&vec3(x.x - u0 * t, x.y, x.z), t),
            Reference::Abc { .. } => -0.5 * self.velocity(x, t).norm_squared(),
            Reference::Uniform { .. } | Reference::SquareNoSlip => 0.0,
        }
    }

    pub fn pressure_gradient(&self, x: &Vec3, t: f64) -> Vec3 {
        match *self {
            Reference::TaylorGreen { nu } => -0.5 * (-4.0 * nu * t).exp() * vec3((2.0 * x.x).sin(), (2.0 * x.y).sin(), 0.0),
            Reference::MeanFlowTaylorGreen { nu, u0 } => Reference::TaylorGreen { nu }.pressure_gradient(&vec3(x.x - u0 * t, x.y, x.z), t),
            Reference::Abc { .. } => -(self.gradient(x, t).transpose() * self.velocity(x, t)),
            Reference::Uniform { .. } | Reference::SquareNoSlip => Vec3::zeros(),
        }
    }

    /// Pointwise momentum residual `du/dt + (u.grad)u + grad p - nu lap u`.
    pub fn momentum_residual(&self, x: &Vec3, t: f64) -> Vec3 {
        let u = self.velocity(x, t);
        self.time_derivative(x, t) + self.gradient(x, t) * u + self.pressure_gradient(x, t) - self.nu() * self.laplacian(x, t)
    }

    /// Kinetic energy `(1/2) int |u|^2` over the natural domain.
    pub fn energy(&self, t: f64) -> Option<f64> {
        match *self {
            Reference::TaylorGreen { nu } => Some(PI * PI * (-4.0 * nu * t).exp()),
            Reference::MeanFlowTaylorGreen { nu, u0 } => Some(PI * PI * (-4.0 * nu * t).exp() + 2.0 * PI * PI * u0 * u0),
            Reference::Abc { nu, a, b, c } => Some(0.5 * (a * a + b * b + c * c) * (2.0 * PI).powi(3) * (-2.0 * nu * t).exp()),
            _ => None,
        }
    }

    /// Helicity `int u . w` (3D).
    pub fn helicity(&self, t: f64) -> Option<f64> {
        match *self {
            Reference::Abc { .. } => self.energy(t).map(|e| 2.0 * e),
            _ => None,
        }
    }

    /// Largest divergence and momentum residual at `samples` seeded points
    /// of `[0, 2pi)^d x [0, 1]`, plus the worst mismatch between the
    /// analytic and a centred-difference time derivative.
    pub fn check(&self, samples: usize, seed: u64) -> ReferenceCheck {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut out = ReferenceCheck::default();
        for _ in 0..samples {
            let mut x = vec3(rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI), 0.0);
            if self.dim() == 3 {
                x.z = rng.random_range(0.0..2.0 * PI);
            }
            let t = rng.random_range(0.0..1.0);
            out.divergence = out.divergence.max(self.gradient(&x, t).trace().abs());
            if self.is_solution() {
                out.momentum = out.momentum.max(self.momentum_residual(&x, t).norm());
            }
            let dt = 1e-5;
            let fd = (self.velocity(&x, t + dt) - self.velocity(&x, t - dt)) / (2.0 * dt);
            out.time_derivative = out.time_derivative.max((fd - self.time_derivative(&x, t)).norm());
        }
        out
    }
}

fn check_nu(nu: f64) -> Result<()> {
    if nu.is_finite() && nu >= 0.0 {
        Ok(())
    } else {
        Err(Error::arg("nu", "must be finite and nonnegative"))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCheck {
    pub divergence: f64,
    pub momentum: f64,
    pub time_derivative: f64,
}

impl ReferenceCheck {
    /// Gate applied before any study: divergence 1e-12, momentum 1e-10,
    /// centred time difference 1e-8.
    pub fn passes(&self) -> bool {
        self.divergence <= 1e-12 && self.momentum <= 1e-10 && self.time_derivative <= 1e-8
    }
}

/// `R_h u(t)`.
pub fn interpolate(mesh: &Mesh, r: &Reference, t: f64) -> Vec<f64> {
    de_rham_1(mesh, &|x| r.velocity(x, t))
}

/// `|P_h tau_h|_{L2h}` with `tau_h = R_h du/dt - f_h(R_h u)` (Euler or
/// isotropic NS, depending on the reference viscosity).
pub fn truncation_error(ctx: &FlowContext, r: &Reference, t: f64) -> Result<f64> {
    let v = interpolate(ctx.mesh(), r, t);
    let dv = de_rham_1(ctx.mesh(), &|x| r.time_derivative(x, t));
    let visc = if r.nu() > 0.0 { Viscosity::Isotropic { nu: r.nu() } } else { Viscosity::None };
    let f = ctx.rhs(&v, &visc)?;
    let tau: Vec<f64> = dv.iter().zip(&f).map(|(a, b)| a - b).collect();
    Ok(ctx.ops.norm_l2h(&ctx.leray.project_force(tau)?))
}

/// Error norms of a velocity cochain against a reference.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    pub l2h: f64,
    pub rec: f64,
    pub whitney: Option<f64>,
}

pub fn error_norms(ops: &Operators, v: &[f64], r: &Reference, t: f64, whitney: bool) -> Result<ErrorNorms> {
    check_len(ops.n_facets(), v.len())?;
    let exact = interpolate(&ops.mesh, r, t);
    let e: Vec<f64> = v.iter().zip(&exact).map(|(a, b)| a - b).collect();
    let whitney = if whitney { Some(whitney_error(ops, v, &|x| r.velocity(x, t))?) } else { None };
    Ok(ErrorNorms { l2h: ops.norm_l2h(&e), rec: ops.norm_rec(&e), whitney })
}

/// Lowest-order edge-element reconstruction in 2D: the primal fluxes
/// `M1 v` expanded in the Raviart–Thomas basis of each triangle,
/// `u_h(x) = sum_i F_i (x - p_i) / (2|T|)` with `F_i` the outward flux
/// through the edge opposite `p_i`.
pub fn whitney_velocity(ops: &Operators, v: &[f64], cell: usize, x: &Vec3) -> Vec3 {
    let mesh = &ops.mesh;
    let c = &mesh.cells[cell];
    let mut u = Vec3::zeros();
    for inc in &c.facets {
        let f = &mesh.facets[inc.index];
        let opp = (0..3).find(|&a| !f.verts.contains(&c.verts[a])).expect("triangle vertex opposite an edge");
        let flux = inc.sign * ops.m1[inc.index] * v[inc.index];
        u += flux * (x - c.corners[opp]) / (2.0 * c.volume);
    }
    u
}

/// `|u - W_h v|_{L2}` over the primal triangles (2D only), with the
/// degree-5 rule on four congruent subtriangles.
pub fn whitney_error(ops: &Operators, v: &[f64], u: &dyn Fn(&Vec3) -> Vec3) -> Result<f64> {
    let mesh = &ops.mesh;
    if mesh.dim != 2 {
        return Err(Error::Unsupported("the Whitney norm is implemented in 2D".into()));
    }
    check_len(ops.n_facets(), v.len())?;
    let mut s = 0.0;
    for (i, c) in mesh.cells.iter().enumerate() {
        let p = &c.corners;
        let m = [0.5 * (p[0] + p[1]), 0.5 * (p[1] + p[2]), 0.5 * (p[2] + p[0])];
        for t in [[p[0], m[0], m[2]], [m[0], p[1], m[1]], [m[2], m[1], p[2]], [m[0], m[1], m[2]]] {
            s += geom::integrate_triangle(&t[0], &t[1], &t[2], &mut |x| (u(x) - whitney_velocity(ops, v, i, x)).norm_squared());
        }
    }
    Ok(s.sqrt())
}

/// Least-squares fit of `log err = r log h + c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    /// Half width of the 95% confidence band on the slope.
    pub band: f64,
    pub points_used: usize,
}

pub fn fit_slope(h: &[f64], err: &[f64]) -> Option<SlopeFit> {
    let n = h.len();
    if n < 2 || n != err.len() || err.iter().any(|e| !(*e > 0.0)) {
        return None;
    }
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let (mx, my) = (x.iter().sum::<f64>() / n as f64, y.iter().sum::<f64>() / n as f64);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let band = if n > 2 {
        let rss: f64 = x.iter().zip(&y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
        use statrs::distribution::{ContinuousCDF, StudentsT};
        let t = StudentsT::new(0.0, 1.0, (n - 2) as f64).map(|d| d.inverse_cdf(0.975)).unwrap_or(f64::INFINITY);
        t * (rss / (n - 2) as f64 / sxx).sqrt()
    } else {
        f64::INFINITY
    };
    Some(SlopeFit { slope, band, points_used: n })
}

/// Errors against `h` for one norm, with the fitted rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub quantity: String,
    pub family: Family,
    pub resolutions: Vec<usize>,
    pub h: Vec<f64>,
    pub error: Vec<f64>,
    pub monotone: bool,
    /// `None` when fewer than four points lie above 100 times the floor or
    /// the errors are not monotonically decreasing.
    pub fit: Option<SlopeFit>,
}

/// Resolutions required for a fit.
pub const MIN_FIT_POINTS: usize = 4;

impl ConvergenceTable {
    pub fn new(quantity: &str, family: Family, resolutions: Vec<usize>, h: Vec<f64>, error: Vec<f64>, floor: f64) -> Self {
        let monotone = error.windows(2).all(|w| w[1] < w[0]);
        let keep: Vec<usize> = (0..error.len()).filter(|&i| error[i] >= 100.0 * floor).collect();
        let fit = if monotone && keep.len() >= MIN_FIT_POINTS {
            fit_slope(&keep.iter().map(|&i| h[i]).collect::<Vec<_>>(), &keep.iter().map(|&i| error[i]).collect::<Vec<_>>())
        } else {
            None
        };
        ConvergenceTable { quantity: quantity.to_string(), family, resolutions, h, error, monotone, fit }
    }

    pub fn slope(&self) -> Option<f64> {
        self.fit.as_ref().map(|f| f.slope)
    }
}

/// Mesh construction for a study.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshFamily {
    pub family: Family,
    pub perturbation: f64,
    pub seed: u64,
}

impl MeshFamily {
    pub fn new(family: Family) -> Self {
        let perturbation = if family == Family::Perturbed { DEFAULT_PERTURBATION } else { 0.0 };
        MeshFamily { family, perturbation, seed: 1 }
    }

    /// The complex on which `r` lives at resolution `n`: the 2pi-torus in
    /// 2D, an `n x n x n/2` prismatic 2pi-torus in 3D, the square `[0, pi]^2`
    /// for no-slip data.
    pub fn build(&self, r: &Reference, n: usize) -> Result<Mesh> {
        match r {
            Reference::Abc { .. } => {
                let layer = build_torus_mesh(n, self.family, self.perturbation, self.seed)?;
                let nl = (n / 2).max(2);
                extrude_prismatic(&layer, nl, &[2.0 * PI / nl as f64])
            }
            Reference::SquareNoSlip => build_square_dirichlet(n, self.family, self.perturbation, self.seed),
            _ => build_torus_mesh(n, self.family, self.perturbation, self.seed),
        }
    }
}

/// Perturbation fraction of the perturbed family in studies.
pub const DEFAULT_PERTURBATION: f64 = 0.15;

/// Time-step policy of a convergence study: `dt = min(dt_max, c h^2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DtPolicy {
    pub c: f64,
    pub dt_max: f64,
}

impl Default for DtPolicy {
    fn default() -> Self {
        DtPolicy { c: 0.5, dt_max: 0.05 }
    }
}

impl DtPolicy {
    /// Step size dividing `t_end` into a whole number of steps.
    pub fn step(&self, h: f64, t_end: f64) -> (f64, usize) {
        let target = (self.c * h * h).min(self.dt_max);
        let n = (t_end / target).ceil().max(1.0) as usize;
        (t_end / n as f64, n)
    }
}

/// Settings of [`convergence_study`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub reference: Reference,
    pub mesh: MeshFamily,
    pub resolutions: Vec<usize>,
    pub t_end: f64,
    pub dt: DtPolicy,
    pub tol: f64,
    pub extrusion: Extrusion,
    /// Sampling interval (in steps) of the sup-in-time error.
    pub cadence: usize,
}

impl StudyConfig {
    pub fn new(reference: Reference, family: Family, resolutions: Vec<usize>, t_end: f64) -> Self {
        StudyConfig { reference, mesh: MeshFamily::new(family), resolutions, t_end, dt: DtPolicy::default(), tol: 1e-13, extrusion: Extrusion::DualCell, cadence: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolutions.len() < MIN_FIT_POINTS {
            return Err(Error::arg("resolutions", format!("at least {MIN_FIT_POINTS} resolutions are needed")));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::arg("t_end", "must be finite and nonnegative"));
        }
        if !(self.tol >= 1e-14) {
            return Err(Error::arg("tol", "must be at least 1e-14"));
        }
        if self.cadence == 0 {
            return Err(Error::arg("cadence", "must be positive"));
        }
        if !self.reference.is_solution() {
            return Err(Error::arg("reference", "convergence needs an exact solution"));
        }
        let check = self.reference.check(64, 5);
        if !check.passes() {
            return Err(Error::Numerical(format!("reference {} failed its residual gate: {check:?}", self.reference.name())));
        }
        Ok(())
    }
}

/// One resolution of a study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub n: usize,
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    pub sup_l2h: f64,
    pub final_rec: f64,
    pub energy_drift: f64,
}

/// Sup-in-time discrete `L2h` velocity error per resolution with fitted
/// slope. The initial state is `P_h R_h u(0)`.
pub fn convergence_study(cfg: &StudyConfig) -> Result<(Vec<StudyRow>, ConvergenceTable)> {
    cfg.validate()?;
    let r = &cfg.reference;
    let visc = if r.nu() > 0.0 { Viscosity::Isotropic { nu: r.nu() } } else { Viscosity::None };
    let rows = cfg.resolutions.par_iter().map(|&n| study_row(cfg, &visc, n)).collect::<Result<Vec<_>>>()?;
    let floor = cfg.tol;
    let table = ConvergenceTable::new("sup_l2h", cfg.mesh.family, cfg.resolutions.clone(), rows.iter().map(|r| r.h).collect(), rows.iter().map(|r| r.sup_l2h).collect(), floor);
    Ok((rows, table))
}

fn study_row(cfg: &StudyConfig, visc: &Viscosity, n: usize) -> Result<StudyRow> {
    let r = &cfg.reference;
    let mesh = Arc::new(cfg.mesh.build(r, n)?);
    let h = mesh.h();
    let ctx = FlowContext::new(mesh, cfg.extrusion)?;
    let (dt, steps) = cfg.dt.step(h, cfg.t_end);
    let mut s = FlowState::new(ctx.leray.project_force(interpolate(ctx.mesh(), r, 0.0))?);
    let e0 = ctx.energy(&s.v);
    let mut sup = error_norms(&ctx.ops, &s.v, r, 0.0, false)?.l2h;
    for k in 1..=steps {
        s = ctx.advance(&s, dt, visc, cfg.tol, Stepper::ImplicitMidpoint)?.0;
        s.t = k as f64 * dt;
        if k % cfg.cadence == 0 || k == steps {
            sup = sup.max(error_norms(&ctx.ops, &s.v, r, s.t, false)?.l2h);
        }
    }
    let last = error_norms(&ctx.ops, &s.v, r, s.t, false)?;
    let drift = if visc.is_none() { (ctx.energy(&s.v) - e0).abs() / e0 } else { f64::NAN };
    Ok(StudyRow { n, h, dt, steps, sup_l2h: sup, final_rec: last.rec, energy_drift: drift })
}

/// A dual 1-cycle homologous to the first period direction, snapped to
/// dual edges by a shortest-path search through the cell passing closest
/// to `(0, y0)`; coefficients are +-1 along the path.
pub fn horizontal_cycle(mesh: &Mesh, y0: f64) -> Result<Vec<f64>> {
    use std::cmp::Ordering;
    use std::collections::BinaryHeap;
    let Some(lx) = (if let crate::mesh::Domain::Torus { period } = mesh.domain { Some(period[0]) } else { None }) else {
        return Err(Error::Unsupported("homology cycles need a periodic complex".into()));
    };
    let canon = |x: f64| x.rem_euclid(lx);
    let start = (0..mesh.n_cells())
        .min_by(|&a, &b| {
            let d = |c: usize| {
                let p = mesh.cells[c].centre;
                let dx = canon(p.x).min(lx - canon(p.x));
                dx * dx + (p.y - y0).powi(2) + p.z * p.z
            };
            d(a).total_cmp(&d(b))
        })
        .ok_or_else(|| Error::InvalidComplex("empty complex".into()))?;
    let mut adj: Vec<Vec<(usize, usize, f64, f64)>> = vec![Vec::new(); mesh.n_cells()];
    for (j, f) in mesh.facets.iter().enumerate() {
        if let (Some(a), Some(b)) = (f.tail, f.head) {
            let d = f.dual_head - f.dual_tail;
            adj[a].push((b, j, 1.0, d.x));
            adj[b].push((a, j, -1.0, -d.x));
        }
    }
    #[derive(PartialEq)]
    struct Item(f64, usize, i64);
    impl Eq for Item {}
    impl PartialOrd for Item {
        fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
            Some(self.cmp(o))
        }
    }
    impl Ord for Item {
        fn cmp(&self, o: &Self) -> Ordering {
            o.0.total_cmp(&self.0)
        }
    }
    let sheets = 3i64;
    let key = |c: usize, k: i64| c * sheets as usize + (k + 1) as usize;
    let mut dist = vec![f64::INFINITY; mesh.n_cells() * sheets as usize];
    let mut prev: Vec<Option<(usize, i64, usize, f64)>> = vec![None; dist.len()];
    let x0 = canon(mesh.cells[start].centre.x);
    let mut heap = BinaryHeap::new();
    dist[key(start, 0)] = 0.0;
    heap.push(Item(0.0, start, 0));
    while let Some(Item(d, c, k)) = heap.pop() {
        if d > dist[key(c, k)] {
            continue;
        }
        if c == start && k == 1 {
            break;
        }
        let xc = canon(mesh.cells[c].centre.x) + k as f64 * lx;
        for &(nb, j, sign, dx) in &adj[c] {
            let xu = xc + dx;
            let kn = ((xu - canon(mesh.cells[nb].centre.x)) / lx).round() as i64;
            if !(-1..=1).contains(&kn) {
                continue;
            }
            let dy = mesh.cells[nb].centre.y - y0;
            let nd = d + mesh.facets[j].dual_length * (1.0 + dy * dy);
            if nd < dist[key(nb, kn)] {
                dist[key(nb, kn)] = nd;
                prev[key(nb, kn)] = Some((c, k, j, sign));
                heap.push(Item(nd, nb, kn));
            }
        }
    }
    let _ = x0;
    if !dist[key(start, 1)].is_finite() {
        return Err(Error::InvalidComplex("no homology cycle found".into()));
    }
    let mut gamma = vec![0.0; mesh.n_facets()];
    let (mut c, mut k) = (start, 1);
    while let Some((pc, pk, j, sign)) = prev[key(c, k)] {
        gamma[j] += sign;
        c = pc;
        k = pk;
        if c == start && k == 0 {
            break;
        }
    }
    Ok(gamma)
}

/// Conserved-quantity errors at one resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservedRow {
    pub n: usize,
    pub h: f64,
    pub energy_error: f64,
    pub circulation_error: Option<f64>,
    pub helicity_error: Option<f64>,
    pub energy_drift: f64,
}

/// `|E_h - E|`, `|Gamma_h - Gamma|` on the horizontal cycle (2D) and
/// `|H_h - H|` (3D) at `t = 0`, plus the relative energy change of an
/// Euler run over `[0, t_end]`.
pub fn conserved_quantity_convergence(r: &Reference, mesh: MeshFamily, resolutions: &[usize], t_end: f64, dt: f64, tol: f64) -> Result<(Vec<ConservedRow>, Vec<ConvergenceTable>)> {
    let rows = resolutions.par_iter().map(|&n| conserved_row(r, &mesh, n, t_end, dt, tol)).collect::<Result<Vec<_>>>()?;
    let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let mut tables = vec![ConvergenceTable::new("energy", mesh.family, resolutions.to_vec(), hs.clone(), rows.iter().map(|r| r.energy_error).collect(), 0.0)];
    if rows.iter().all(|r| r.circulation_error.is_some()) {
        tables.push(ConvergenceTable::new("circulation", mesh.family, resolutions.to_vec(), hs.clone(), rows.iter().map(|r| r.circulation_error.unwrap()).collect(), 0.0));
    }
    if rows.iter().all(|r| r.helicity_error.is_some()) {
        tables.push(ConvergenceTable::new("helicity", mesh.family, resolutions.to_vec(), hs, rows.iter().map(|r| r.helicity_error.unwrap()).collect(), 0.0));
    }
    Ok((rows, tables))
}

fn conserved_row(r: &Reference, mesh: &MeshFamily, n: usize, t_end: f64, dt: f64, tol: f64) -> Result<ConservedRow> {
    let m = Arc::new(mesh.build(r, n)?);
    let h = m.h();
    let ctx = FlowContext::new(m, Extrusion::DualCell)?;
    let v = interpolate(ctx.mesh(), r, 0.0);
    let e_exact = r.energy(0.0).ok_or_else(|| Error::arg("reference", "no closed-form energy"))?;
    let energy_error = (ctx.energy(&v) - e_exact).abs();
    let circulation_error = if ctx.mesh().dim == 2 {
        let y0 = 0.5;
        let gamma = horizontal_cycle(ctx.mesh(), y0)?;
        let exact = match *r {
            Reference::MeanFlowTaylorGreen { u0, .. } => 2.0 * PI * u0,
            _ => 0.0,
        };
        Some((sparse::dot(&v, &gamma) - exact).abs())
    } else {
        None
    };
    let helicity_error = match (r.helicity(0.0), ctx.helicity.is_some()) {
        (Some(hx), true) => Some((ctx.helicity(&v)? - hx).abs()),
        _ => None,
    };
    let mut s = FlowState::new(ctx.leray.project_force(v)?);
    let e0 = ctx.energy(&s.v);
    let steps = (t_end / dt).round() as usize;
    s = ctx.run(&s, dt, steps, &Viscosity::None, tol, Stepper::ImplicitMidpoint)?;
    let energy_drift = (ctx.energy(&s.v) - e0).abs() / e0;
    Ok(ConservedRow { n, h, energy_error, circulation_error, helicity_error, energy_drift })
}

/// Errors of the discrete building blocks on the interpolant of a
/// reference at `t`, one number per probe.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxiliaryErrors {
    /// Largest normalized Hodge-star error on 1-forms.
    pub hodge: f64,
    /// `|(I - P_h) R_h u|_{L2h}`.
    pub projection: f64,
    /// `|(I - P_h) R_h u|_rec`.
    pub projection_rec: f64,
    /// Largest Gram reconstruction error at the dual vertices.
    pub reconstruction: f64,
    /// Largest error of the two-cell face average at the dual-edge
    /// midpoints.
    pub face_average: f64,
    /// `|u - W_h R_h u|_{L2}` (2D only).
    pub whitney: Option<f64>,
    /// `|E_h(R_h u) - E|`.
    pub energy: Option<f64>,
}

pub fn auxiliary_errors(ctx: &FlowContext, r: &Reference, t: f64) -> Result<AuxiliaryErrors> {
    let mesh = ctx.mesh();
    let u = |x: &Vec3| r.velocity(x, t);
    let v = interpolate(mesh, r, t);
    let hodge = max_of(&crate::dec::hodge_error_probe(&ctx.ops, &crate::dec::AnalyticForm::Vector(&u), 1)?);
    let p = ctx.leray.project(&v)?;
    let e: Vec<f64> = v.iter().zip(&p).map(|(a, b)| a - b).collect();
    let rec = ctx.recon.reconstruct_velocity(&v)?;
    let reconstruction = mesh.cells.iter().zip(&rec).map(|(c, w)| (w - u(&c.centre)).norm()).fold(0.0, f64::max);
    let face_average = mesh.facets.iter().zip(ctx.recon.face_average(&rec)).map(|(f, w)| (w - u(&f.dual_midpoint())).norm()).fold(0.0, f64::max);
    let whitney = if mesh.dim == 2 { Some(whitney_error(&ctx.ops, &v, &u)?) } else { None };
    let energy = r.energy(t).map(|ex| (ctx.energy(&v) - ex).abs());
    Ok(AuxiliaryErrors { hodge, projection: ctx.ops.norm_l2h(&e), projection_rec: ctx.ops.norm_rec(&e), reconstruction, face_average, whitney, energy })
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}
