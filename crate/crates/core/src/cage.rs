//! Cage representation, validation and the per-triangle geometric frame.
//!
//! Indices inside a triangle are cyclic: for local index `j`, `j + 1` and
//! `j + 2` are taken modulo 3. Every per-edge quantity with local index `j`
//! refers to the edge *opposite* corner `j`, i.e. `(p[j+1], p[j+2])`.

use std::collections::BTreeMap;

use crate::error::{MvcError, Result};
use crate::linalg::{Mat3, Vec3};
use crate::real::Real;
use crate::tolerances::Tolerances;

#[inline]
pub(crate) fn next(j: usize) -> usize {
    (j + 1) % 3
}

#[inline]
pub(crate) fn prev(j: usize) -> usize {
    (j + 2) % 3
}

/// A closed, consistently oriented triangular cage with outward normals.
#[derive(Clone, Debug, PartialEq)]
pub struct CageMesh<T> {
    vertices: Vec<Vec3<T>>,
    triangles: Vec<[usize; 3]>,
    adjacency: Vec<Vec<usize>>,
    orientation_flipped: bool,
    signed_volume: T,
    bbox_min: Vec3<T>,
    bbox_max: Vec3<T>,
}

impl<T: Real> CageMesh<T> {
    /// Validates an indexed triangle soup with the default area tolerance.
    pub fn new(vertices: Vec<Vec3<T>>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        Self::with_area_tolerance(vertices, triangles, Tolerances::<T>::default().eps_area)
    }

    pub fn with_area_tolerance(vertices: Vec<Vec3<T>>, mut triangles: Vec<[usize; 3]>, eps_area: T) -> Result<Self> {
        if vertices.is_empty() || triangles.is_empty() {
            return Err(MvcError::InvalidMesh("empty vertex or triangle list".into()));
        }
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(MvcError::InvalidMesh(format!("vertex {i} is not finite")));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&i| i >= vertices.len()) {
                return Err(MvcError::InvalidMesh(format!(
                    "triangle {t} references vertex {bad} out of range"
                )));
            }
        }

        let (bbox_min, bbox_max) = bounding_box(&vertices);
        let diag = (bbox_max - bbox_min).norm();
        let min_area = eps_area * diag * diag;
        for (t, tri) in triangles.iter().enumerate() {
            let [a, b, c] = tri.map(|i| vertices[i]);
            let area = (b - a).cross(&(c - a)).norm() / T::lit(2.0);
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] || !(area > min_area) {
                return Err(MvcError::DegenerateTriangle(t));
            }
        }

        check_edges(&triangles)?;

        let mut signed_volume = signed_volume(&vertices, &triangles);
        let orientation_flipped = signed_volume < T::zero();
        if orientation_flipped {
            for tri in &mut triangles {
                tri.swap(1, 2);
            }
            signed_volume = -signed_volume;
        }

        let mut adjacency = vec![Vec::new(); vertices.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for &i in tri {
                adjacency[i].push(t);
            }
        }

        Ok(CageMesh {
            vertices,
            triangles,
            adjacency,
            orientation_flipped,
            signed_volume,
            bbox_min,
            bbox_max,
        })
    }

    pub fn vertices(&self) -> &[Vec3<T>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Incident triangles `N1(i)` of every vertex.
    pub fn vertex_triangle_adjacency(&self) -> &[Vec<usize>] {
        &self.adjacency
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// True when the input winding was inward and every triangle was flipped.
    pub fn orientation_flipped(&self) -> bool {
        self.orientation_flipped
    }

    pub fn signed_volume(&self) -> T {
        self.signed_volume
    }

    pub fn bbox(&self) -> (Vec3<T>, Vec3<T>) {
        (self.bbox_min, self.bbox_max)
    }

    pub fn bbox_diagonal(&self) -> T {
        (self.bbox_max - self.bbox_min).norm()
    }

    pub fn triangle_positions(&self, t: usize) -> [Vec3<T>; 3] {
        self.triangles[t].map(|i| self.vertices[i])
    }

    pub fn centroid(&self) -> Vec3<T> {
        let n = T::from_usize(self.vertices.len()).unwrap();
        self.vertices.iter().copied().sum::<Vec3<T>>() / n
    }

    /// Same connectivity, new positions. Used for rigidly moved copies in tests
    /// and for evaluating on a deformed cage.
    pub fn with_vertices(&self, vertices: Vec<Vec3<T>>) -> Result<Self> {
        Self::new(vertices, self.triangles.clone())
    }

    /// Unsigned distance from `x` to the closest point of the cage surface.
    pub fn distance_to_surface(&self, x: &Vec3<T>) -> T {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.triangle_positions(t);
                (closest_point_on_triangle(x, &a, &b, &c) - *x).norm()
            })
            .fold(T::infinity(), T::min)
    }
}

/// Validates and wraps raw mesh data.
pub fn load_cage<T: Real>(vertices: Vec<Vec3<T>>, triangles: Vec<[usize; 3]>) -> Result<CageMesh<T>> {
    CageMesh::new(vertices, triangles)
}

fn bounding_box<T: Real>(v: &[Vec3<T>]) -> (Vec3<T>, Vec3<T>) {
    v.iter()
        .skip(1)
        .fold((v[0], v[0]), |(lo, hi), p| (lo.component_min(p), hi.component_max(p)))
}

fn signed_volume<T: Real>(v: &[Vec3<T>], tris: &[[usize; 3]]) -> T {
    let six = T::lit(6.0);
    tris.iter()
        .map(|&[a, b, c]| v[a].dot(&v[b].cross(&v[c])))
        .fold(T::zero(), |s, x| s + x)
        / six
}

/// Each undirected edge must be used by exactly two triangles, once in each
/// direction.
fn check_edges(tris: &[[usize; 3]]) -> Result<()> {
    let mut edges: BTreeMap<(usize, usize), Vec<bool>> = BTreeMap::new();
    for tri in tris {
        for j in 0..3 {
            let (a, b) = (tri[j], tri[next(j)]);
            edges.entry((a.min(b), a.max(b))).or_default().push(a < b);
        }
    }
    for (&(a, b), dirs) in &edges {
        match dirs.len() {
            1 => return Err(MvcError::NotClosed(a, b)),
            2 if dirs[0] == dirs[1] => return Err(MvcError::InconsistentOrientation(a, b)),
            2 => {}
            count => return Err(MvcError::NonManifoldEdge { a, b, count }),
        }
    }
    Ok(())
}

/// Closest point of triangle `abc` to `p` (Ericson's region test).
pub fn closest_point_on_triangle<T: Real>(p: &Vec3<T>, a: &Vec3<T>, b: &Vec3<T>, c: &Vec3<T>) -> Vec3<T> {
    let zero = T::zero();
    let ab = *b - *a;
    let ac = *c - *a;
    let ap = *p - *a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= zero && d2 <= zero {
        return *a;
    }
    let bp = *p - *b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= zero && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= zero && d1 >= zero && d3 <= zero {
        return *a + ab * (d1 / (d1 - d3));
    }
    let cp = *p - *c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= zero && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= zero && d2 >= zero && d6 <= zero {
        return *a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= zero && (d4 - d3) >= zero && (d5 - d6) >= zero {
        return *b + (*c - *b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = T::one() / (va + vb + vc);
    *a + ab * (vb * denom) + ac * (vc * denom)
}

/// A query point `η`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QueryPoint<T>(pub Vec3<T>);

impl<T: Real> QueryPoint<T> {
    pub fn new(position: Vec3<T>) -> Result<Self> {
        if !position.is_finite() {
            return Err(MvcError::InvalidMesh("query point is not finite".into()));
        }
        Ok(QueryPoint(position))
    }
}

/// Position of a query point relative to one triangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameClass {
    /// Off the support plane: the general formulas apply.
    Generic,
    /// On the support plane, outside the closed triangle.
    OnSupportPlaneOutsideT,
    /// Strictly inside the triangle.
    InsideT,
    /// On the boundary of the triangle.
    OnEdgeOrVertex,
}

impl FrameClass {
    pub fn is_on_triangle(self) -> bool {
        matches!(self, FrameClass::InsideT | FrameClass::OnEdgeOrVertex)
    }
}

/// All quantities of one (triangle, query point) pair.
///
/// For local index `j`: `u[j] = p[j] − η`, `d[j] = |u[j]|`,
/// `n_vec[j] = u[j+1] × u[j+2]`, `theta[j]` the angle between `u[j+1]` and
/// `u[j+2]`, `edge[j] = p[j+2] − p[j+1]` and `jn[j]` its cross-product
/// matrix, which is also the Jacobian of `n_vec[j]` with respect to `η`.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangleFrame<T> {
    pub triangle: usize,
    pub vertex_ids: [usize; 3],
    pub eta: Vec3<T>,
    pub p: [Vec3<T>; 3],
    pub u: [Vec3<T>; 3],
    pub d: [T; 3],
    pub n_vec: [Vec3<T>; 3],
    pub n_unit: [Vec3<T>; 3],
    pub theta: [T; 3],
    pub edge: [Vec3<T>; 3],
    pub jn: [Mat3<T>; 3],
    /// `det(p0 − η, p1 − η, p2 − η)`
    pub det_a: T,
    /// Integral of the outward unit normal over the spherical projection.
    pub m: Vec3<T>,
    /// Unit normal of the triangle.
    pub normal: Vec3<T>,
    pub area: T,
    /// `(η − p0) · normal`, positive on the outer side.
    pub signed_distance: T,
    pub mean_edge: T,
    /// Barycentric coordinates of the projection of `η` onto the support plane.
    pub barycentric: [T; 3],
    pub classification: FrameClass,
}

impl<T: Real> TriangleFrame<T> {
    /// `d[j+1] · d[j+2]`
    #[inline]
    pub fn edge_distance_product(&self, j: usize) -> T {
        self.d[next(j)] * self.d[prev(j)]
    }

    /// `2η − p[j+1] − p[j+2]`
    #[inline]
    pub fn edge_midpoint_offset(&self, j: usize) -> Vec3<T> {
        -(self.u[next(j)] + self.u[prev(j)])
    }
}

/// Builds the frame of triangle `t` seen from `eta`.
pub fn build_triangle_frame<T: Real>(
    cage: &CageMesh<T>,
    t: usize,
    eta: &Vec3<T>,
    tol: &Tolerances<T>,
) -> Result<TriangleFrame<T>> {
    let vertex_ids = cage.triangles[t];
    let p = cage.triangle_positions(t);
    let u = p.map(|q| q - *eta);
    let d = u.map(|x| x.norm());

    let vertex_tol = tol.eps_vertex * cage.bbox_diagonal();
    if let Some(j) = (0..3).find(|&j| d[j] <= vertex_tol) {
        return Err(MvcError::VertexCoincidence(vertex_ids[j]));
    }

    let n_vec: [Vec3<T>; 3] = std::array::from_fn(|j| u[next(j)].cross(&u[prev(j)]));
    let n_norm = n_vec.map(|n| n.norm());
    let n_unit: [Vec3<T>; 3] = std::array::from_fn(|j| {
        if n_norm[j] > T::zero() {
            n_vec[j] / n_norm[j]
        } else {
            Vec3::zero()
        }
    });
    let theta: [T; 3] = std::array::from_fn(|j| n_norm[j].atan2(u[next(j)].dot(&u[prev(j)])));
    let edge: [Vec3<T>; 3] = std::array::from_fn(|j| p[prev(j)] - p[next(j)]);
    let jn = edge.map(|k| Mat3::skew(&k));

    let det_a = u[0].dot(&n_vec[0]);
    let half = T::lit(0.5);
    let m = (0..3).map(|j| n_unit[j] * (half * theta[j])).sum();

    let cross = (p[1] - p[0]).cross(&(p[2] - p[0]));
    let twice_area = cross.norm();
    let normal = cross / twice_area;
    let area = half * twice_area;
    let signed_distance = (*eta - p[0]).dot(&normal);
    let mean_edge = (edge[0].norm() + edge[1].norm() + edge[2].norm()) / T::lit(3.0);

    // barycentric coordinates of the in-plane projection
    let q = *eta - normal * signed_distance;
    let barycentric: [T; 3] = std::array::from_fn(|j| edge[j].cross(&(q - p[next(j)])).dot(&normal) / twice_area);

    let classification = if signed_distance.abs() > tol.eps_plane * mean_edge {
        FrameClass::Generic
    } else {
        let b_tol = tol.eps_plane;
        let min_b = barycentric.iter().copied().fold(T::infinity(), T::min);
        if min_b > b_tol {
            FrameClass::InsideT
        } else if min_b >= -b_tol {
            FrameClass::OnEdgeOrVertex
        } else {
            FrameClass::OnSupportPlaneOutsideT
        }
    };

    Ok(TriangleFrame {
        triangle: t,
        vertex_ids,
        eta: *eta,
        p,
        u,
        d,
        n_vec,
        n_unit,
        theta,
        edge,
        jn,
        det_a,
        m,
        normal,
        area,
        signed_distance,
        mean_edge,
        barycentric,
        classification,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn octant() -> CageMesh<f64> {
        // tetrahedron whose slanted face is the octant triangle, wound so that
        // face 0 is ((1,0,0),(0,1,0),(0,0,1)) with outward normal (1,1,1)/√3
        let v = vec![
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(-1.0, -1.0, -1.0),
        ];
        CageMesh::new(v, vec![[0, 1, 2], [0, 3, 1], [1, 3, 2], [2, 3, 0]]).unwrap()
    }

    #[test]
    fn cube_loads_with_expected_volume() {
        let cage = shapes::cube::<f64>(1.0);
        assert_eq!(cage.num_vertices(), 8);
        assert_eq!(cage.num_triangles(), 12);
        assert!(!cage.orientation_flipped());
        assert_relative_eq!(cage.signed_volume(), 8.0, epsilon = 1e-12);
    }

    #[test]
    fn reversed_cube_is_flipped() {
        let cage = shapes::cube::<f64>(1.0);
        let tris = cage.triangles().iter().map(|&[a, b, c]| [a, c, b]).collect();
        let flipped = CageMesh::new(cage.vertices().to_vec(), tris).unwrap();
        assert!(flipped.orientation_flipped());
        assert_relative_eq!(flipped.signed_volume(), 8.0, epsilon = 1e-12);
        assert_eq!(flipped.triangles(), cage.triangles());
    }

    #[test]
    fn open_cube_is_rejected() {
        let cage = shapes::cube::<f64>(1.0);
        let mut tris = cage.triangles().to_vec();
        tris.pop();
        let err = CageMesh::new(cage.vertices().to_vec(), tris).unwrap_err();
        assert!(matches!(err, MvcError::NotClosed(..)));
    }

    #[test]
    fn mixed_winding_is_rejected() {
        let cage = shapes::cube::<f64>(1.0);
        let mut tris = cage.triangles().to_vec();
        tris[3].swap(1, 2);
        let err = CageMesh::new(cage.vertices().to_vec(), tris).unwrap_err();
        assert!(matches!(err, MvcError::InconsistentOrientation(..)));
    }

    #[test]
    fn non_manifold_and_degenerate_are_rejected() {
        let cage = shapes::cube::<f64>(1.0);
        let mut tris = cage.triangles().to_vec();
        tris.push(tris[0]);
        let err = CageMesh::new(cage.vertices().to_vec(), tris).unwrap_err();
        assert!(matches!(err, MvcError::NonManifoldEdge { count: 3, .. }));

        let mut v = cage.vertices().to_vec();
        v[1] = v[0];
        let err = CageMesh::new(v, cage.triangles().to_vec()).unwrap_err();
        assert!(matches!(err, MvcError::DegenerateTriangle(_)));

        let err = CageMesh::new(cage.vertices().to_vec(), vec![[0, 1, 99]]).unwrap_err();
        assert!(matches!(err, MvcError::InvalidMesh(_)));
    }

    #[test]
    fn adjacency_matches_triangles() {
        let cage = shapes::icosphere::<f64>(1);
        for (i, tris) in cage.vertex_triangle_adjacency().iter().enumerate() {
            for &t in tris {
                assert!(cage.triangles()[t].contains(&i));
            }
            let count = cage.triangles().iter().filter(|t| t.contains(&i)).count();
            assert_eq!(count, tris.len());
        }
    }

    #[test]
    fn octant_frame_at_origin() {
        let cage = octant();
        let f = build_triangle_frame(&cage, 0, &Vec3::zero(), &Tolerances::default()).unwrap();
        for j in 0..3 {
            assert_relative_eq!(f.theta[j], FRAC_PI_2, epsilon = 1e-15);
            assert_relative_eq!(f.m[j], FRAC_PI_4, epsilon = 1e-15);
            assert_eq!(f.jn[j].transpose(), -f.jn[j]);
        }
        assert_eq!(f.n_vec[0], Vec3::new(1.0, 0.0, 0.0));
        assert_relative_eq!(f.det_a, 1.0, epsilon = 1e-15);
        assert_eq!(f.classification, FrameClass::Generic);
    }

    #[test]
    fn octant_frame_classification() {
        let cage = octant();
        let tol = Tolerances::default();
        let c = Vec3::new(1.0, 1.0, 1.0) / 3.0;
        let f = build_triangle_frame(&cage, 0, &c, &tol).unwrap();
        assert_eq!(f.classification, FrameClass::InsideT);

        let f = build_triangle_frame(&cage, 0, &Vec3::new(-1.0, -1.0, 3.0), &tol).unwrap();
        assert_eq!(f.classification, FrameClass::OnSupportPlaneOutsideT);

        let mid = Vec3::new(0.5, 0.5, 0.0);
        let f = build_triangle_frame(&cage, 0, &mid, &tol).unwrap();
        assert_eq!(f.classification, FrameClass::OnEdgeOrVertex);

        let err = build_triangle_frame(&cage, 0, &Vec3::new(1.0, 0.0, 0.0), &tol).unwrap_err();
        assert_eq!(err, MvcError::VertexCoincidence(0));
    }

    #[test]
    fn frame_invariants_hold() {
        let cage = shapes::l_cage::<f64>();
        let tol = Tolerances::default();
        let eta = Vec3::new(0.31, 0.77, 0.42);
        for t in 0..cage.num_triangles() {
            let f = build_triangle_frame(&cage, t, &eta, &tol).unwrap();
            let bound = f.theta.iter().fold(0.0, |s, x| s + x) / 2.0;
            assert!(f.m.norm() <= bound * (1.0 + 1e-12));
            for j in 0..3 {
                let lhs = f.theta[j].sin() * f.edge_distance_product(j);
                assert_relative_eq!(lhs, f.n_vec[j].norm(), max_relative = 1e-12);
                let det_j = f.u[j].dot(&f.n_vec[j]);
                assert_relative_eq!(det_j, f.det_a, max_relative = 1e-10, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn closest_point_regions() {
        let a = Vec3::new(0.0, 0.0, 0.0);
        let b = Vec3::new(1.0, 0.0, 0.0);
        let c = Vec3::new(0.0, 1.0, 0.0);
        let q = closest_point_on_triangle(&Vec3::new(0.2, 0.2, 3.0), &a, &b, &c);
        assert_relative_eq!((q - Vec3::new(0.2, 0.2, 0.0)).norm(), 0.0, epsilon = 1e-15);
        let q = closest_point_on_triangle(&Vec3::new(-1.0, -1.0, 0.0), &a, &b, &c);
        assert_eq!(q, a);
        let q = closest_point_on_triangle(&Vec3::new(1.0, 1.0, 0.0), &a, &b, &c);
        assert_relative_eq!((q - Vec3::new(0.5, 0.5, 0.0)).norm(), 0.0, epsilon = 1e-15);
    }
}
