//! Boundary-aligned acute triangulation of the square `[0, pi]^2`.

use super::torus::jitter;
use super::{from_triangles, Corner, Domain, Family, Mesh};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use std::f64::consts::PI;

/// Acute triangulation of `[0, pi]^2` whose boundary is a union of edges.
///
/// The bottom side has `n` intervals of width `b = pi/n`. Rows are spaced
/// `H = pi/m` with `m` the even integer nearest `2n/sqrt(3)` (and above
/// `n`, so that `H < b`). Even rows carry `n + 1` vertices at `x = i b`;
/// odd rows carry `n` vertices at the cell midpoints, except that the two
/// outermost move to `(H + b)/2` from the walls, which keeps the wall
/// triangles acute. The perturbed family jitters interior vertices only.
pub fn build_square_dirichlet(n: usize, family: Family, perturbation: f64, seed: u64) -> Result<Mesh> {
    if n < 4 {
        return Err(Error::arg("n", format!("need at least 4 cells per side, got {n}")));
    }
    if !(0.0..0.3).contains(&perturbation) {
        return Err(Error::arg("perturbation", format!("{perturbation} is outside [0, 0.3)")));
    }
    let side = PI;
    let b = side / n as f64;
    let mut m = 2 * ((n as f64 / 3f64.sqrt()).round() as usize);
    if m <= n {
        m = n + 1 + (n + 1) % 2;
    }
    let hrow = side / m as f64;
    let x1 = 0.5 * (hrow + b);
    let mut vertices = Vec::new();
    let mut row_ids: Vec<Vec<usize>> = Vec::with_capacity(m + 1);
    for j in 0..=m {
        let y = j as f64 * hrow;
        let xs: Vec<f64> = if j % 2 == 0 {
            (0..=n).map(|i| i as f64 * b).collect()
        } else {
            let mut xs = vec![x1];
            xs.extend((1..n - 1).map(|i| (i as f64 + 0.5) * b));
            xs.push(side - x1);
            xs
        };
        let ids = xs
            .iter()
            .map(|&x| {
                vertices.push(Vec3::new(x, y, 0.0));
                vertices.len() - 1
            })
            .collect();
        row_ids.push(ids);
    }
    let c = |v: usize| -> Corner { (v, [0, 0]) };
    let mut tris = Vec::new();
    for j in (0..m).step_by(2) {
        let (e0, o, e1) = (&row_ids[j], &row_ids[j + 1], &row_ids[j + 2]);
        // even row j below odd row j + 1
        for i in 0..n {
            tris.push([c(e0[i]), c(e0[i + 1]), c(o[i])]);
        }
        for i in 0..n - 1 {
            tris.push([c(o[i]), c(e0[i + 1]), c(o[i + 1])]);
        }
        // odd row j + 1 below even row j + 2
        for i in 0..n {
            tris.push([c(o[i]), c(e1[i + 1]), c(e1[i])]);
        }
        for i in 0..n - 1 {
            tris.push([c(o[i]), c(o[i + 1]), c(e1[i + 1])]);
        }
        // wall triangles
        tris.push([c(e0[0]), c(o[0]), c(e1[0])]);
        tris.push([c(e0[n]), c(e1[n]), c(o[n - 1])]);
    }
    if family == Family::Perturbed && perturbation > 0.0 {
        let on_wall: Vec<bool> = vertices
            .iter()
            .map(|p| p.x == 0.0 || p.y == 0.0 || (p.x - side).abs() < 1e-12 || (p.y - side).abs() < 1e-12)
            .collect();
        let h0 = hrow.min(b);
        jitter(&mut vertices, &tris, [0.0, 0.0], perturbation * h0, seed, |v| !on_wall[v])?;
    }
    from_triangles(Domain::Square { side }, family, vertices, &tris)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::triangle_quality;

    #[test]
    fn structured_square_is_acute_and_tiles() {
        for n in [4, 5, 8, 16] {
            let m = build_square_dirichlet(n, Family::Equilateral, 0.0, 0).unwrap();
            assert!((m.volume() - PI * PI).abs() < 1e-11, "n = {n}");
            assert_eq!(m.euler_characteristic(), 1);
            for c in &m.cells {
                assert!(triangle_quality(&[c.corners[0], c.corners[1], c.corners[2]]) > 0.0);
            }
        }
    }

    #[test]
    fn boundary_dual_edges_match_boundary_faces() {
        let m = build_square_dirichlet(8, Family::Equilateral, 0.0, 0).unwrap();
        let nb = m.facets.iter().filter(|f| f.boundary).count();
        let on_wall = |p: &Vec3| p.x.abs() < 1e-12 || p.y.abs() < 1e-12 || (p.x - PI).abs() < 1e-12 || (p.y - PI).abs() < 1e-12;
        let geometric = m.facets.iter().filter(|f| on_wall(&f.corners[0]) && on_wall(&f.corners[1]) && on_wall(&f.centroid)).count();
        assert_eq!(nb, geometric);
        for f in m.facets.iter().filter(|f| f.boundary) {
            assert!(f.tail.is_some() != f.head.is_some());
        }
    }

    #[test]
    fn perturbed_square_keeps_walls() {
        let m = build_square_dirichlet(8, Family::Perturbed, 0.2, 5).unwrap();
        assert!((m.volume() - PI * PI).abs() < 1e-11);
    }
}
