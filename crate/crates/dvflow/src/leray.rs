//! Discrete Helmholtz–Leray projection, harmonic 1-cochains, pressure
//! recovery and the spectral constants of the divergence-free subspace.
//!
//! On a closed complex `P_h w = w - D~0 phi` with `L_h phi = D_top M1 w`
//! solved in the mean-zero gauge. On a complex with walls the gradient
//! `G = D~0` has its wall rows removed, so `P_h` maps `V_h^0` (cochains
//! vanishing on wall dual edges) into itself; the Poisson operator
//! `D_top M1 G` is then a Neumann-type Laplacian with constant kernel.

use crate::dec::Operators;
use crate::error::{check_len, Error, Result};
use crate::recon::ReconstructionContext;
use crate::sparse::{self, CsrMatrix, MeanZeroSolver};
use crate::spectral::{lowest_eigenpairs, EigenOptions, EigenPairs};
use crate::geom::Vec3;
use std::sync::Arc;

/// Tolerance below which an eigenvalue of the curl-curl pencil on `V_h`
/// is counted as harmonic, relative to the domain's lowest eigenvalue scale.
pub const HARMONIC_TOL: f64 = 1e-8;

#[derive(Debug)]
pub struct LerayContext {
    pub ops: Arc<Operators>,
    /// Wall dual edges, all false on a closed complex.
    pub wall: Vec<bool>,
    /// `-L_h = -D_top M1 G`, symmetric positive semidefinite.
    pub neg_laplacian: CsrMatrix,
    solver: MeanZeroSolver,
    harmonics: Vec<Vec<f64>>,
}

impl LerayContext {
    pub fn new(ops: Arc<Operators>) -> Result<Self> {
        let mesh = ops.mesh.clone();
        let wall = mesh.facet_boundary_mask();
        let keep: Vec<f64> = wall.iter().map(|w| if *w { 0.0 } else { 1.0 }).collect();
        let g = ops.dt0.scale_rows(&keep);
        let neg_laplacian = ops.div.matmul(&g).scale(-1.0);
        let solver = MeanZeroSolver::new(&neg_laplacian, &ops.m0)?;
        let mut ctx = LerayContext { ops, wall, neg_laplacian, solver, harmonics: Vec::new() };
        if mesh.is_periodic() {
            ctx.harmonics = ctx.build_harmonics()?;
        }
        Ok(ctx)
    }

    pub fn is_dirichlet(&self) -> bool {
        self.wall.iter().any(|w| *w)
    }

    /// `G q`: the dual gradient with wall rows removed.
    pub fn gradient(&self, q: &[f64]) -> Vec<f64> {
        let mut g = self.ops.grad(q);
        g.iter_mut().zip(&self.wall).filter(|(_, w)| **w).for_each(|(g, _)| *g = 0.0);
        g
    }

    /// Mean-zero solution of `-L_h phi = b`.
    pub fn solve_poisson(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len(self.ops.n_cells(), b.len())?;
        self.solver.solve(b)
    }

    fn project_unchecked(&self, w: &[f64]) -> Result<Vec<f64>> {
        let rhs: Vec<f64> = self.ops.divergence(w).iter().map(|x| -x).collect();
        let phi = self.solver.solve(&rhs)?;
        let g = self.gradient(&phi);
        let out: Vec<f64> = w.iter().zip(&g).map(|(w, g)| w - g).collect();
        let scale = sparse::max_abs(w).max(f64::MIN_POSITIVE);
        let res = sparse::max_abs(&self.ops.divergence(&out));
        if !res.is_finite() || res > 1e-9 * scale.max(1.0) {
            return Err(Error::Solver(format!("projection left divergence residual {res:.3e}")));
        }
        Ok(out)
    }

    /// Leray projection onto `V_h`; on a complex with walls this is the
    /// projection onto `V_h^0` and requires the input to vanish on walls.
    pub fn project(&self, w: &[f64]) -> Result<Vec<f64>> {
        if self.is_dirichlet() {
            self.project_dirichlet(w)
        } else {
            check_len(self.ops.n_facets(), w.len())?;
            self.project_unchecked(w)
        }
    }

    /// Projection onto `V_h^0`. Inputs with nonzero wall values are rejected.
    pub fn project_dirichlet(&self, w: &[f64]) -> Result<Vec<f64>> {
        check_len(self.ops.n_facets(), w.len())?;
        if !self.is_dirichlet() {
            return Err(Error::Unsupported("the Dirichlet projector needs a complex with walls".into()));
        }
        if let Some(j) = w.iter().zip(&self.wall).position(|(v, b)| *b && *v != 0.0) {
            return Err(Error::arg("w", format!("nonzero value on wall dual edge {j}")));
        }
        self.project_unchecked(w)
    }

    /// Zero the wall entries and project: the projection of an arbitrary
    /// force onto `V_h` (or `V_h^0`).
    pub fn project_force(&self, mut w: Vec<f64>) -> Result<Vec<f64>> {
        check_len(self.ops.n_facets(), w.len())?;
        self.mask(&mut w);
        self.project_unchecked(&w)
    }

    /// Zero the wall entries of a 1-cochain.
    pub fn mask(&self, w: &mut [f64]) {
        w.iter_mut().zip(&self.wall).filter(|(_, b)| **b).for_each(|(v, _)| *v = 0.0);
    }

    fn build_harmonics(&self) -> Result<Vec<Vec<f64>>> {
        let mesh = &self.ops.mesh;
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for c in 0..mesh.dim {
            let mut e = Vec3::zeros();
            e[c] = 1.0;
            let mut h = self.project_unchecked(&crate::dec::de_rham_1(mesh, &|_| e))?;
            for b in &basis {
                let s = self.ops.inner(1, b, &h);
                sparse::axpy(-s, b, &mut h);
            }
            let n = self.ops.norm_l2h(&h);
            if n < 1e-8 {
                return Err(Error::InvalidComplex("degenerate harmonic cochain".into()));
            }
            h.iter_mut().for_each(|x| *x /= n);
            basis.push(h);
        }
        Ok(basis)
    }

    /// `M1`-orthonormal basis of the discrete harmonic 1-cochains on a
    /// periodic complex (one per period direction); empty with walls.
    pub fn harmonic_basis(&self) -> &[Vec<f64>] {
        &self.harmonics
    }

    /// Coefficients `<eta_i, v>_1` of `v` along the harmonic basis.
    pub fn harmonic_components(&self, v: &[f64]) -> Vec<f64> {
        self.harmonics.iter().map(|h| self.ops.inner(1, h, v)).collect()
    }

    /// Remove the harmonic part of `v` in place.
    pub fn remove_harmonics(&self, v: &mut [f64]) {
        for h in &self.harmonics {
            let s = self.ops.inner(1, h, v);
            sparse::axpy(-s, h, v);
        }
    }

    fn spectral_shift(&self) -> f64 {
        let e = self.ops.mesh.extent();
        let l = e.x.max(e.y).max(e.z);
        0.25 * (2.0 * std::f64::consts::PI / l).powi(2)
    }

    fn restrict_divergence_free(&self, deflate: bool) -> impl Fn(&mut [f64]) + '_ {
        move |v: &mut [f64]| {
            if let Ok(p) = self.project_unchecked(v) {
                v.copy_from_slice(&p);
            }
            if deflate {
                self.remove_harmonics(v);
            }
        }
    }

    /// Lowest eigenpairs of the curl-curl pencil on `V_h`, optionally with
    /// the harmonic cochains deflated. Needs a periodic complex.
    pub fn curl_curl_spectrum(&self, wanted: usize, deflate: bool) -> Result<EigenPairs> {
        if self.is_dirichlet() {
            return Err(Error::Unsupported("the vector spectrum is implemented on periodic complexes".into()));
        }
        let opts = EigenOptions { wanted, block: (wanted + 6).min(self.ops.n_facets()), shift: self.spectral_shift(), ..Default::default() };
        let restrict = self.restrict_divergence_free(deflate);
        lowest_eigenpairs(&self.ops.curl_curl, &self.ops.m1, &restrict, &opts)
    }

    /// Dimension of the harmonic space counted from the curl-curl spectrum
    /// on `V_h` with only the gradients removed.
    pub fn harmonic_dimension(&self) -> Result<usize> {
        let d = self.ops.mesh.dim;
        let pairs = self.curl_curl_spectrum(d + 1, false)?;
        let scale = self.spectral_shift();
        Ok(pairs.values.iter().filter(|v| v.abs() < HARMONIC_TOL * scale.max(1.0)).count())
    }

    /// Discrete Poincaré constant: the smallest eigenvalue of the curl-curl
    /// pencil on `V_h` modulo harmonics.
    pub fn poincare_constant(&self) -> Result<f64> {
        Ok(self.curl_curl_spectrum(1, true)?.values[0])
    }

    /// Smallest nonzero eigenvalue `mu_1` of the pencil `(-L_h, M0)` on
    /// mean-zero 0-cochains.
    pub fn scalar_poincare_constant(&self) -> Result<f64> {
        let m0 = &self.ops.m0;
        let total: f64 = m0.iter().sum();
        let restrict = |q: &mut [f64]| {
            let mean = q.iter().zip(m0).map(|(q, m)| q * m).sum::<f64>() / total;
            q.iter_mut().for_each(|q| *q -= mean);
        };
        let opts = EigenOptions { wanted: 1, block: 7.min(self.ops.n_cells()), shift: self.spectral_shift(), ..Default::default() };
        Ok(lowest_eigenpairs(&self.neg_laplacian, m0, &restrict, &opts)?.values[0])
    }

    /// Inf-sup constant bound `sqrt(mu_1)`.
    pub fn infsup_constant(&self) -> Result<f64> {
        Ok(self.scalar_poincare_constant()?.sqrt())
    }

    /// The inf-sup quotient at the witness `w = G q`:
    /// `b(w, q) / (|w|_{H1h} |q|_{M0})` with `b(w, q) = <w, G q>_1`, which is the
    /// `M0`-pairing of `q` with the adjoint discrete divergence of `w`.
    pub fn infsup_quotient(&self, q: &[f64]) -> Result<f64> {
        check_len(self.ops.n_cells(), q.len())?;
        let w = self.gradient(q);
        let b = self.ops.inner(1, &w, &w);
        let h1 = self.ops.norm_h1h(&w);
        Ok(b / (h1 * self.ops.norm_m0(q)))
    }

    /// Mean-zero pressure from `-L_h p = div(Q(v, v) + G(e_kin + Phi)) + nu div(Delta_h v)`.
    ///
    /// `potential` is the body-force potential at dual vertices and
    /// `viscous` an optional viscous force; both may be omitted.
    pub fn pressure_recover(&self, recon: &ReconstructionContext, v: &[f64], potential: Option<&[f64]>, viscous: Option<&[f64]>) -> Result<Vec<f64>> {
        check_len(self.ops.n_facets(), v.len())?;
        let mut b = recon.kinetic_energy_density(v)?;
        if let Some(phi) = potential {
            check_len(b.len(), phi.len())?;
            b.iter_mut().zip(phi).for_each(|(b, p)| *b += p);
        }
        let mut force = recon.lamb(v, v)?;
        let gb = self.gradient(&b);
        force.iter_mut().zip(&gb).for_each(|(f, g)| *f += g);
        if let Some(visc) = viscous {
            check_len(force.len(), visc.len())?;
            force.iter_mut().zip(visc).for_each(|(f, g)| *f -= g);
        }
        self.mask(&mut force);
        let rhs = self.ops.divergence(&force);
        self.solver.solve(&rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dec::{assemble_operators, de_rham_0, de_rham_1};
    use crate::geom::vec3;
    use crate::mesh::{build_square_dirichlet, build_torus_mesh, Family, Mesh};
    use crate::recon::Extrusion;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ctx(mesh: Mesh) -> LerayContext {
        LerayContext::new(Arc::new(assemble_operators(Arc::new(mesh)).unwrap())).unwrap()
    }

    fn random(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn projector_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for mesh in [build_torus_mesh(8, Family::Perturbed, 0.2, 1).unwrap(), build_square_dirichlet(8, Family::Perturbed, 0.2, 2).unwrap()] {
            let c = ctx(mesh);
            let nf = c.ops.n_facets();
            for _ in 0..5 {
                let mut a = random(nf, &mut rng);
                let mut b = random(nf, &mut rng);
                c.mask(&mut a);
                c.mask(&mut b);
                let pa = c.project(&a).unwrap();
                let pb = c.project(&b).unwrap();
                let ppa = c.project(&pa).unwrap();
                let na = c.ops.norm_l2h(&a);
                assert!(c.ops.norm_l2h(&pa.iter().zip(&ppa).map(|(x, y)| x - y).collect::<Vec<_>>()) <= 1e-12 * na);
                let s1 = c.ops.inner(1, &pa, &b);
                let s2 = c.ops.inner(1, &a, &pb);
                assert!((s1 - s2).abs() <= 1e-12 * na * c.ops.norm_l2h(&b));
                assert!(c.ops.norm_l2h(&pa) <= na * (1.0 + 1e-12));
                assert!(sparse::max_abs(&c.ops.divergence(&pa)) <= 1e-10 * na);
                assert!(pa.iter().zip(&c.wall).all(|(v, w)| !*w || *v == 0.0));
                let q = random(c.ops.n_cells(), &mut rng);
                let g = c.gradient(&q);
                assert!(sparse::max_abs(&c.project(&g).unwrap()) <= 1e-11 * sparse::max_abs(&g));
                assert!(c.ops.inner(1, &g, &pa).abs() <= 1e-12 * c.ops.norm_l2h(&g) * na);
            }
            if c.is_dirichlet() {
                assert!(c.project(&vec![1.0; nf]).is_err());
            }
        }
    }

    #[test]
    fn harmonic_space_of_the_torus() {
        let c = ctx(build_torus_mesh(8, Family::Perturbed, 0.2, 3).unwrap());
        let h = c.harmonic_basis();
        assert_eq!(h.len(), 2);
        for (i, a) in h.iter().enumerate() {
            assert!(sparse::max_abs(&c.ops.curl(a)) < 1e-11);
            for (j, b) in h.iter().enumerate() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((c.ops.inner(1, a, b) - e).abs() < 1e-12);
            }
        }
        for e in [vec3(1.0, 0.0, 0.0), vec3(0.0, 1.0, 0.0)] {
            let r = de_rham_1(&c.ops.mesh, &|_| e);
            assert!(sparse::max_abs(&c.ops.hodge_laplacian(&r)) < 1e-11);
            assert!(sparse::max_abs(&c.ops.divergence(&r)) < 1e-10);
        }
        assert_eq!(c.harmonic_dimension().unwrap(), 2);
        let c = ctx(build_torus_mesh(16, Family::Equilateral, 0.0, 0).unwrap());
        let tg = de_rham_1(&c.ops.mesh, &|x| vec3(x.x.sin() * x.y.cos(), -x.x.cos() * x.y.sin(), 0.0));
        assert!(c.harmonic_components(&tg).iter().all(|s| s.abs() < 1e-10));
    }

    #[test]
    fn spectral_constants_and_infsup() {
        let c = ctx(build_torus_mesh(8, Family::Equilateral, 0.0, 0).unwrap());
        let lam = c.poincare_constant().unwrap();
        let mu = c.scalar_poincare_constant().unwrap();
        assert!(lam > 0.5 && lam < 1.5, "{lam}");
        assert!(mu > 0.5 && mu < 1.5, "{mu}");
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..20 {
            let mut q = random(c.ops.n_cells(), &mut rng);
            let m = c.ops.mean0(&q);
            q.iter_mut().for_each(|x| *x -= m);
            assert!(c.infsup_quotient(&q).unwrap() >= mu.sqrt() - 1e-9);
        }
    }

    #[test]
    fn pressure_recovery_basics() {
        let c = ctx(build_torus_mesh(16, Family::Equilateral, 0.0, 0).unwrap());
        let r = ReconstructionContext::new(c.ops.clone(), Extrusion::DualCell).unwrap();
        let nf = c.ops.n_facets();
        assert!(c.pressure_recover(&r, &vec![0.0; nf], None, None).unwrap().iter().all(|p| p.abs() < 1e-14));
        let v = c.project(&de_rham_1(&c.ops.mesh, &|x| vec3(x.x.sin() * x.y.cos(), -x.x.cos() * x.y.sin(), 0.0))).unwrap();
        let p = c.pressure_recover(&r, &v, None, None).unwrap();
        let phi = vec![3.0; c.ops.n_cells()];
        let p2 = c.pressure_recover(&r, &v, Some(&phi), None).unwrap();
        assert!(p.iter().zip(&p2).all(|(a, b)| (a - b).abs() < 1e-12));
        let exact = de_rham_0(&c.ops.mesh, &|x| 0.25 * ((2.0 * x.x).cos() + (2.0 * x.y).cos()));
        let m = c.ops.mean0(&exact);
        let err: Vec<f64> = p.iter().zip(&exact).map(|(a, b)| a - b + m).collect();
        assert!(c.ops.norm_m0(&err) < 0.1 * c.ops.norm_m0(&exact), "{}", c.ops.norm_m0(&err));
    }
}
