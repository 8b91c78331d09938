//! Vertical extrusion of a periodic triangulation into triangular prisms.

use super::{assemble, new_cell, new_facet, new_ridge, Domain, Edge, Mesh, Peak, Skeleton};
use crate::error::{Error, Result};
use crate::geom::{ez, Vec3};
use crate::sparse::CsrMatrix;

/// Extrude a 2D torus complex into `n_layers` periodic layers.
///
/// `heights` holds one thickness per layer, or a single value used for all
/// layers. IDs: vertex `(v, l)` is `l V + v`; horizontal edge `(e, l)` is
/// `l E + e` and vertical edge `(v, l)` is `n E + l V + v`; triangle
/// `(f, l)` is `l F + f` and quad `(e, l)` is `n F + l E + e`; prism
/// `(f, l)` is `l F + f`. The dual vertex of a prism sits at the 2D
/// circumcentre at layer mid-height.
pub fn extrude_prismatic(layer: &Mesh, n_layers: usize, heights: &[f64]) -> Result<Mesh> {
    if layer.dim != 2 {
        return Err(Error::arg("layer", "extrusion needs a 2D complex"));
    }
    let period2 = match &layer.domain {
        Domain::Torus { period } => *period,
        Domain::Square { .. } => return Err(Error::arg("layer", "extrusion needs a periodic layer")),
    };
    if n_layers < 2 {
        return Err(Error::arg("n_layers", format!("need at least 2 layers, got {n_layers}")));
    }
    let dz: Vec<f64> = match heights.len() {
        1 => vec![heights[0]; n_layers],
        l if l == n_layers => heights.to_vec(),
        l => return Err(Error::arg("heights", format!("expected 1 or {n_layers} thicknesses, got {l}"))),
    };
    if let Some(h) = dz.iter().find(|h| !(**h > 0.0) || !h.is_finite()) {
        return Err(Error::arg("heights", format!("thickness {h} is not positive")));
    }
    let nz = n_layers;
    let lz: f64 = dz.iter().sum();
    let mut z = vec![0.0; nz + 1];
    for l in 0..nz {
        z[l + 1] = z[l] + dz[l];
    }
    let (nv, ne, nf) = (layer.n_ridges(), layer.n_facets(), layer.n_cells());
    let up = |p: &Vec3, h: f64| Vec3::new(p.x, p.y, h);
    let lp = |l: usize| (l + 1) % nz;

    let vid = |v: usize, l: usize| l * nv + v;
    let hid = |e: usize, l: usize| l * ne + e;
    let vert_id = |v: usize, l: usize| nz * ne + l * nv + v;
    let tid = |f: usize, l: usize| l * nf + f;
    let qid = |e: usize, l: usize| nz * nf + l * ne + e;

    let mut vertices = Vec::with_capacity(nz * nv);
    for zl in z.iter().take(nz) {
        for x in &layer.vertices {
            vertices.push(up(x, *zl));
        }
    }

    // edges and ridges
    let mut edges = Vec::with_capacity(nz * (ne + nv));
    let mut ridges = Vec::with_capacity(nz * (ne + nv));
    let mut d0 = Vec::new();
    for l in 0..nz {
        for (e, edge) in layer.edges.iter().enumerate() {
            let a = up(&layer.vertices[edge.tail], z[l]);
            let b = up(&(layer.vertices[edge.head] + edge.wrap), z[l]);
            let len = (b - a).norm();
            edges.push(Edge { tail: vid(edge.tail, l), head: vid(edge.head, l), wrap: edge.wrap });
            ridges.push(new_ridge(vec![vid(edge.tail, l), vid(edge.head, l)], vec![a, b], 0.5 * (a + b), (b - a) / len, len));
            d0.push((hid(e, l), vid(edge.tail, l), -1.0));
            d0.push((hid(e, l), vid(edge.head, l), 1.0));
        }
    }
    for l in 0..nz {
        for (v, x) in layer.vertices.iter().enumerate() {
            let a = up(x, z[l]);
            let b = up(x, z[l + 1]);
            let wrap = if l + 1 == nz { Vec3::new(0.0, 0.0, lz) } else { Vec3::zeros() };
            edges.push(Edge { tail: vid(v, l), head: vid(v, lp(l)), wrap });
            ridges.push(new_ridge(vec![vid(v, l), vid(v, lp(l))], vec![a, b], 0.5 * (a + b), ez(), dz[l]));
            d0.push((vert_id(v, l), vid(v, l), -1.0));
            d0.push((vert_id(v, l), vid(v, lp(l)), 1.0));
        }
    }

    // faces
    let d1_2d = &layer.incidence[1];
    let mut facets = Vec::with_capacity(nz * (nf + ne));
    let mut d1 = Vec::new();
    for l in 0..nz {
        for (f, cell) in layer.cells.iter().enumerate() {
            let corners: Vec<Vec3> = cell.corners.iter().map(|p| up(p, z[l])).collect();
            let centroid = corners.iter().sum::<Vec3>() / 3.0;
            let verts = cell.verts.iter().map(|&v| vid(v, l)).collect();
            facets.push(new_facet(verts, corners, cell.volume, centroid, up(&cell.centre, z[l]), ez()));
            for (e, s) in d1_2d.row(f) {
                d1.push((tid(f, l), hid(e, l), s));
            }
        }
    }
    for l in 0..nz {
        for (e, edge) in layer.edges.iter().enumerate() {
            let f2 = &layer.facets[e];
            let (a, b) = (f2.corners[0], f2.corners[1]);
            let corners = vec![up(&a, z[l]), up(&b, z[l]), up(&b, z[l + 1]), up(&a, z[l + 1])];
            let verts = vec![vid(edge.tail, l), vid(edge.head, l), vid(edge.head, lp(l)), vid(edge.tail, lp(l))];
            let centre = up(&f2.centroid, 0.5 * (z[l] + z[l + 1]));
            facets.push(new_facet(verts, corners, f2.area * dz[l], centre, centre, f2.normal));
            let q = qid(e, l);
            d1.push((q, hid(e, l), 1.0));
            d1.push((q, vert_id(edge.head, l), 1.0));
            d1.push((q, hid(e, lp(l)), -1.0));
            d1.push((q, vert_id(edge.tail, l), -1.0));
        }
    }

    // prisms
    let mut cells = Vec::with_capacity(nz * nf);
    let mut d2 = Vec::new();
    for l in 0..nz {
        for (f, cell) in layer.cells.iter().enumerate() {
            let mut verts: Vec<usize> = cell.verts.iter().map(|&v| vid(v, l)).collect();
            verts.extend(cell.verts.iter().map(|&v| vid(v, lp(l))));
            let mut corners: Vec<Vec3> = cell.corners.iter().map(|p| up(p, z[l])).collect();
            corners.extend(cell.corners.iter().map(|p| up(p, z[l + 1])));
            let centre = up(&cell.centre, 0.5 * (z[l] + z[l + 1]));
            cells.push(new_cell(verts, corners, centre, cell.volume * dz[l]));
            let c = tid(f, l);
            d2.push((c, tid(f, lp(l)), 1.0));
            d2.push((c, tid(f, l), -1.0));
            for (e, s) in d1_2d.row(f) {
                d2.push((c, qid(e, l), s));
            }
        }
    }

    let peaks = vertices.iter().enumerate().map(|(v, x)| Peak { vertex: v, pos: *x, dual_volume: 0.0, ridges: Vec::new() }).collect();
    let (n0, n1, n2, n3) = (nz * nv, nz * (ne + nv), nz * (nf + ne), nz * nf);
    let incidence = vec![
        CsrMatrix::from_triplets(n1, n0, &d0),
        CsrMatrix::from_triplets(n2, n1, &d1),
        CsrMatrix::from_triplets(n3, n2, &d2),
    ];
    let domain = Domain::Torus { period: [period2[0], period2[1], lz] };
    assemble(Skeleton { dim: 3, domain, family: layer.family, vertices, edges, cells, facets, ridges, peaks, incidence, layers: dz })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_torus_mesh, Family};

    #[test]
    fn prism_counts() {
        let m2 = build_torus_mesh(8, Family::Equilateral, 0.0, 0).unwrap();
        let m = extrude_prismatic(&m2, 4, &[0.5]).unwrap();
        assert_eq!(m.n_cells(), 512);
        assert_eq!(m.euler_characteristic(), 0);
        assert!((m.volume() - 4.0 * std::f64::consts::PI.powi(2) * 2.0).abs() < 1e-10);
        let dual: f64 = m.peaks.iter().map(|p| p.dual_volume).sum();
        assert!((dual - m.volume()).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_layers() {
        let m2 = build_torus_mesh(8, Family::Equilateral, 0.0, 0).unwrap();
        assert!(extrude_prismatic(&m2, 1, &[1.0]).is_err());
        assert!(extrude_prismatic(&m2, 2, &[1.0, -1.0]).is_err());
        assert!(extrude_prismatic(&m2, 3, &[1.0, 1.0]).is_err());
    }
}
