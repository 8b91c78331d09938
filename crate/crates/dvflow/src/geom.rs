//! Small geometric kernels and fixed quadrature rules.

use nalgebra::{Matrix3, Vector3};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

pub fn vec3(x: f64, y: f64, z: f64) -> Vec3 {
    Vec3::new(x, y, z)
}

/// Unit vector along +z; the normal of every planar 2D object.
pub fn ez() -> Vec3 {
    Vec3::new(0.0, 0.0, 1.0)
}

/// Rotation by -90 degrees in the xy-plane: (x, y) -> (y, -x).
///
/// Primal edge tangents map to dual edge tangents under this rotation.
pub fn rot_cw(v: &Vec3) -> Vec3 {
    Vec3::new(v.y, -v.x, v.z)
}

/// Circumcentre of a triangle lying in a plane z = const.
pub fn circumcentre_2d(a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let bx = b.x - a.x;
    let by = b.y - a.y;
    let cx = c.x - a.x;
    let cy = c.y - a.y;
    let d = 2.0 * (bx * cy - by * cx);
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    let ux = (cy * b2 - by * c2) / d;
    let uy = (bx * c2 - cx * b2) / d;
    Vec3::new(a.x + ux, a.y + uy, a.z)
}

/// Signed area of a planar triangle with respect to the normal `n`.
pub fn triangle_area(a: &Vec3, b: &Vec3, c: &Vec3, n: &Vec3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).dot(n)
}

/// Signed area and centroid of a planar polygon, oriented by `n`.
///
/// Computed from the fan around `origin`, which only needs to lie in the
/// plane of the polygon.
pub fn polygon_area_centroid(pts: &[Vec3], origin: &Vec3, n: &Vec3) -> (f64, Vec3) {
    let mut area = 0.0;
    let mut moment = Vec3::zeros();
    let m = pts.len();
    for i in 0..m {
        let p = &pts[i];
        let q = &pts[(i + 1) % m];
        let a = triangle_area(origin, p, q, n);
        area += a;
        moment += a * (origin + p + q) / 3.0;
    }
    let centroid = if area != 0.0 { moment / area } else { *origin };
    (area, centroid)
}

/// Signed distances from the circumcentre to the three edges of a planar
/// triangle, edge `i` being opposite vertex `i`. All positive iff acute.
pub fn circumcentre_edge_distances(p: &[Vec3; 3], n: &Vec3) -> [f64; 3] {
    let c = circumcentre_2d(&p[0], &p[1], &p[2]);
    let mut d = [0.0; 3];
    for (i, di) in d.iter_mut().enumerate() {
        let a = p[(i + 1) % 3];
        let b = p[(i + 2) % 3];
        let e = b - a;
        let inward = n.cross(&e).normalize();
        *di = (c - a).dot(&inward);
    }
    d
}

/// Inscribed radius of a triangle.
pub fn inradius(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let la = (b - c).norm();
    let lb = (c - a).norm();
    let lc = (a - b).norm();
    let area = 0.5 * (b - a).cross(&(c - a)).norm();
    2.0 * area / (la + lb + lc)
}

/// Diameter (longest side) of a triangle.
pub fn diameter(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    (b - a).norm().max((c - b).norm()).max((a - c).norm())
}

/// Five-point Gauss-Legendre rule on [0, 1]: (node, weight).
pub const GAUSS5: [(f64, f64); 5] = [
    (0.046_910_077_030_668_0, 0.118_463_442_528_094_54),
    (0.230_765_344_947_158_45, 0.239_314_335_249_683_23),
    (0.5, 0.284_444_444_444_444_44),
    (0.769_234_655_052_841_6, 0.239_314_335_249_683_23),
    (0.953_089_922_969_332, 0.118_463_442_528_094_54),
];

/// Seven-point triangle rule exact for polynomials of degree 5, in
/// barycentric coordinates with weights summing to one.
pub fn triangle_rule_deg5() -> [([f64; 3], f64); 7] {
    let s15 = 15f64.sqrt();
    let a1 = (6.0 - s15) / 21.0;
    let b1 = (9.0 + 2.0 * s15) / 21.0;
    let w1 = (155.0 - s15) / 1200.0;
    let a2 = (6.0 + s15) / 21.0;
    let b2 = (9.0 - 2.0 * s15) / 21.0;
    let w2 = (155.0 + s15) / 1200.0;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 9.0 / 40.0),
        ([a1, a1, b1], w1),
        ([a1, b1, a1], w1),
        ([b1, a1, a1], w1),
        ([a2, a2, b2], w2),
        ([a2, b2, a2], w2),
        ([b2, a2, a2], w2),
    ]
}

/// Integral of a scalar function over a segment by five-point Gauss.
pub fn integrate_segment(a: &Vec3, b: &Vec3, f: &mut dyn FnMut(&Vec3) -> f64) -> f64 {
    let mut s = 0.0;
    for &(t, w) in GAUSS5.iter() {
        s += w * f(&(a + t * (b - a)));
    }
    s * (b - a).norm()
}

/// Integral of a scalar function over a triangle (degree-5 exact).
pub fn integrate_triangle(a: &Vec3, b: &Vec3, c: &Vec3, f: &mut dyn FnMut(&Vec3) -> f64) -> f64 {
    let area = 0.5 * (b - a).cross(&(c - a)).norm();
    let mut s = 0.0;
    for (l, w) in triangle_rule_deg5().iter() {
        s += w * f(&(l[0] * a + l[1] * b + l[2] * c));
    }
    s * area
}

/// Solve the 3x3 symmetric system `g x = b`, with `g` singular along `z`
/// allowed when `planar` (the z-row is then replaced by the identity).
pub fn gram_inverse(g: &Mat3, planar: bool) -> Option<Mat3> {
    let mut m = *g;
    if planar {
        m[(2, 2)] = 1.0;
        m[(0, 2)] = 0.0;
        m[(1, 2)] = 0.0;
        m[(2, 0)] = 0.0;
        m[(2, 1)] = 0.0;
    }
    let mut inv = m.try_inverse()?;
    if planar {
        inv[(2, 2)] = 0.0;
    }
    Some(inv)
}

/// Spectral condition number of a symmetric positive matrix.
pub fn condition_number(g: &Mat3, planar: bool) -> f64 {
    let eig = g.symmetric_eigenvalues();
    let mut vals: Vec<f64> = eig.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if planar {
        // the z eigenvalue of a planar Gram matrix is exactly zero
        vals.remove(0);
    }
    vals[vals.len() - 1] / vals[0]
}
