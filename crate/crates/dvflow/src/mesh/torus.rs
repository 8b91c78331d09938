//! Periodic triangular lattices on the flat 2-torus.

use super::{from_triangles, triangle_quality, Corner, Domain, Family, Mesh, MIN_TRIANGLE_QUALITY};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Options for [`build_torus_mesh_with`].
#[derive(Clone, Debug, PartialEq)]
pub struct TorusOptions {
    /// Cells per side; must be even and at least 4.
    pub n: usize,
    pub family: Family,
    /// Jitter radius as a fraction of the lattice mesh size, in `[0, 0.3)`.
    pub perturbation: f64,
    pub seed: u64,
    /// Use the exactly equilateral lattice on `[0, 2pi) x [0, sqrt(3) pi)`
    /// instead of the unit-aspect lattice on `[0, 2pi)^2`.
    pub exact_equilateral: bool,
}

/// Maximum redraws per vertex before the jittered generator gives up.
pub const MAX_REDRAWS: usize = 200;

/// Periodic lattice on `[0, 2pi)^2`.
///
/// Row `j` sits at `y = j a` and is shifted by `j a / 2`, so every triangle
/// is the isosceles triangle with base `a = 2pi/n` and height `a`, and the
/// two triangle orientations are point reflections of each other. This is
/// the largest lattice of congruent acute triangles that tiles the square
/// torus; it has exact centroid proximity and reconstruction symmetry.
/// The perturbed family jitters every vertex uniformly in a disk of radius
/// `perturbation * h` and redraws a vertex until all its triangles keep
/// [`MIN_TRIANGLE_QUALITY`].
pub fn build_torus_mesh(n: usize, family: Family, perturbation: f64, seed: u64) -> Result<Mesh> {
    build_torus_mesh_with(&TorusOptions { n, family, perturbation, seed, exact_equilateral: false })
}

pub fn build_torus_mesh_with(opts: &TorusOptions) -> Result<Mesh> {
    let n = opts.n;
    if n < 4 {
        return Err(Error::arg("n", format!("need at least 4 cells per side, got {n}")));
    }
    if n % 2 != 0 {
        return Err(Error::arg("n", format!("the sheared periodic lattice needs an even n, got {n}")));
    }
    if !(0.0..0.3).contains(&opts.perturbation) {
        return Err(Error::arg("perturbation", format!("{} is outside [0, 0.3)", opts.perturbation)));
    }
    let lx = 2.0 * PI;
    let a = lx / n as f64;
    let (ly, row) = if opts.exact_equilateral { (3f64.sqrt() * PI, a * 3f64.sqrt() / 2.0) } else { (lx, a) };
    let nn = n as i64;
    let mut vertices = vec![Vec3::zeros(); n * n];
    for j in 0..n {
        for i in 0..n {
            let half = (2 * i + j) % (2 * n);
            vertices[j * n + i] = Vec3::new(half as f64 * a / 2.0, j as f64 * row, 0.0);
        }
    }
    // lattice point (i, j) in half-spacing units X = 2i + j -> canonical vertex and shift
    let corner = |i: i64, j: i64| -> Corner {
        let jj = j.rem_euclid(nn);
        let sy = j.div_euclid(nn);
        let x = 2 * i + j;
        let ii = (i + sy * nn / 2).rem_euclid(nn);
        let xc = (2 * ii + jj).rem_euclid(2 * nn);
        let sx = (x - xc).div_euclid(2 * nn);
        debug_assert_eq!((x - xc).rem_euclid(2 * nn), 0);
        ((jj * nn + ii) as usize, [sx as i32, sy as i32])
    };
    let mut tris = Vec::with_capacity(2 * n * n);
    for j in 0..nn {
        for i in 0..nn {
            tris.push([corner(i, j), corner(i + 1, j), corner(i, j + 1)]);
            tris.push([corner(i + 1, j), corner(i + 1, j + 1), corner(i, j + 1)]);
        }
    }
    let domain = Domain::Torus { period: [lx, ly, 0.0] };
    if opts.family == Family::Perturbed && opts.perturbation > 0.0 {
        // lattice mesh size: longest dual edge of the unperturbed lattice
        let h0 = if opts.exact_equilateral { a / 3f64.sqrt() } else { 0.75 * a };
        let period = [lx, ly];
        jitter(&mut vertices, &tris, period, opts.perturbation * h0, opts.seed, |_| true)?;
    }
    from_triangles(domain, opts.family, vertices, &tris)
}

/// Per-vertex rejection sampling of a uniform disk jitter.
pub(crate) fn jitter(
    vertices: &mut [Vec3],
    tris: &[[Corner; 3]],
    period: [f64; 2],
    radius: f64,
    seed: u64,
    movable: impl Fn(usize) -> bool,
) -> Result<()> {
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); vertices.len()];
    for (t, tri) in tris.iter().enumerate() {
        for c in tri {
            incident[c.0].push(t);
        }
    }
    let place = |verts: &[Vec3], (v, s): Corner| verts[v] + Vec3::new(s[0] as f64 * period[0], s[1] as f64 * period[1], 0.0);
    // A triangle that starts below the quality floor (the thin wall
    // triangles of fine squares) may not lose more than half its quality.
    let floor: Vec<f64> = tris
        .iter()
        .map(|t| {
            let p = [place(vertices, t[0]), place(vertices, t[1]), place(vertices, t[2])];
            MIN_TRIANGLE_QUALITY.min(0.5 * triangle_quality(&p))
        })
        .collect();
    let acceptable = |verts: &[Vec3], v: usize| {
        incident[v].iter().all(|&t| {
            let p = [place(verts, tris[t][0]), place(verts, tris[t][1]), place(verts, tris[t][2])];
            triangle_quality(&p) >= floor[t]
        })
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in 0..vertices.len() {
        if !movable(v) {
            continue;
        }
        let base = vertices[v];
        let mut accepted = false;
        for _ in 0..MAX_REDRAWS {
            let r = radius * rng.random_range(0.0f64..1.0).sqrt();
            let th = 2.0 * std::f64::consts::PI * rng.random_range(0.0f64..1.0);
            vertices[v] = base + Vec3::new(r * th.cos(), r * th.sin(), 0.0);
            if acceptable(vertices, v) {
                accepted = true;
                break;
            }
        }
        if !accepted {
            // keep the lattice position when the neighbours leave no room
            vertices[v] = base;
            accepted = acceptable(vertices, v);
        }
        if !accepted {
            return Err(Error::MeshGeneration(format!(
                "vertex {v}: no acute placement within {MAX_REDRAWS} draws; reduce the perturbation"
            )));
        }
    }
    Ok(())
}
