//! Reference cages and embedded meshes used by tests, validation and the CLI.

use std::collections::HashMap;

use crate::cage::CageMesh;
use crate::linalg::Vec3;
use crate::real::Real;

/// An indexed triangle soup. No topological requirements.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexedMesh<T> {
    pub vertices: Vec<Vec3<T>>,
    pub triangles: Vec<[usize; 3]>,
}

/// Axis-aligned cube `[-half, half]³`, 8 vertices, 12 outward triangles.
pub fn cube<T: Real>(half: f64) -> CageMesh<T> {
    let (v, t) = cube_soup(half);
    CageMesh::new(v, t).expect("cube is a valid cage")
}

fn cube_soup<T: Real>(half: f64) -> (Vec<Vec3<T>>, Vec<[usize; 3]>) {
    // vertex index = x + 2y + 4z with bit set meaning +half
    let v = (0..8)
        .map(|i| {
            let s = |bit: usize| if i & bit != 0 { half } else { -half };
            Vec3::from_f64([s(1), s(2), s(4)])
        })
        .collect();
    let t = vec![
        [0, 4, 6],
        [0, 6, 2],
        [1, 3, 7],
        [1, 7, 5],
        [0, 1, 5],
        [0, 5, 4],
        [2, 6, 7],
        [2, 7, 3],
        [0, 2, 3],
        [0, 3, 1],
        [4, 5, 7],
        [4, 7, 6],
    ];
    (v, t)
}

/// Regular tetrahedron with vertices on alternate corners of `[-1, 1]³`.
pub fn tetrahedron<T: Real>() -> CageMesh<T> {
    let v = [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]]
        .map(Vec3::from_f64)
        .to_vec();
    CageMesh::new(v, vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]]).expect("tetrahedron is a valid cage")
}

/// Unit icosphere after `level` rounds of 4-to-1 subdivision.
pub fn icosphere<T: Real>(level: usize) -> CageMesh<T> {
    let m = icosphere_soup::<T>(level, 1.0, Vec3::zero());
    CageMesh::new(m.vertices, m.triangles).expect("icosphere is a valid cage")
}

pub fn icosphere_soup<T: Real>(level: usize, radius: f64, center: Vec3<T>) -> IndexedMesh<T> {
    let g = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<[f64; 3]> = vec![
        [-1.0, g, 0.0],
        [1.0, g, 0.0],
        [-1.0, -g, 0.0],
        [1.0, -g, 0.0],
        [0.0, -1.0, g],
        [0.0, 1.0, g],
        [0.0, -1.0, -g],
        [0.0, 1.0, -g],
        [g, 0.0, -1.0],
        [g, 0.0, 1.0],
        [-g, 0.0, -1.0],
        [-g, 0.0, 1.0],
    ];
    let mut tris: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let normalize = |p: [f64; 3]| {
        let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        [p[0] / n, p[1] / n, p[2] / n]
    };
    for v in &mut verts {
        *v = normalize(*v);
    }
    for _ in 0..level {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<[f64; 3]>| {
            *cache.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let (pa, pb) = (verts[a], verts[b]);
                verts.push(normalize([
                    (pa[0] + pb[0]) / 2.0,
                    (pa[1] + pb[1]) / 2.0,
                    (pa[2] + pb[2]) / 2.0,
                ]));
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(tris.len() * 4);
        for &[a, b, c] in &tris {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        tris = next;
    }
    let vertices = verts
        .into_iter()
        .map(|p| Vec3::from_f64(p) * T::lit(radius) + center)
        .collect();
    IndexedMesh {
        vertices,
        triangles: tris,
    }
}

/// Non-convex L-shaped prism: the polygon
/// `(0,0) (2,0) (2,1) (1,1) (1,2) (0,2)` extruded over `z ∈ [0, 1]`.
pub fn l_cage<T: Real>() -> CageMesh<T> {
    let outline = [[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]];
    let n = outline.len();
    let mut v = Vec::with_capacity(2 * n);
    for z in [0.0, 1.0] {
        for p in &outline {
            v.push(Vec3::from_f64([p[0], p[1], z]));
        }
    }
    // counter-clockwise triangulation of the outline, all from corner 0
    let cap = [[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 5]];
    let mut t = Vec::new();
    for &[a, b, c] in &cap {
        t.push([a + n, b + n, c + n]);
        t.push([a, c, b]);
    }
    for i in 0..n {
        let j = (i + 1) % n;
        t.push([i, j, j + n]);
        t.push([i, j + n, i + n]);
    }
    CageMesh::new(v, t).expect("L cage is a valid cage")
}

/// UV sphere as an embedded (non-cage) mesh.
pub fn uv_sphere<T: Real>(radius: f64, center: Vec3<T>, rings: usize, segments: usize) -> IndexedMesh<T> {
    let mut vertices = vec![center + Vec3::from_f64([0.0, 0.0, radius])];
    for r in 1..rings {
        let phi = std::f64::consts::PI * r as f64 / rings as f64;
        for s in 0..segments {
            let th = 2.0 * std::f64::consts::PI * s as f64 / segments as f64;
            let p = [
                radius * phi.sin() * th.cos(),
                radius * phi.sin() * th.sin(),
                radius * phi.cos(),
            ];
            vertices.push(center + Vec3::from_f64(p));
        }
    }
    vertices.push(center + Vec3::from_f64([0.0, 0.0, -radius]));
    let south = vertices.len() - 1;
    let ring = |r: usize, s: usize| 1 + (r - 1) * segments + (s % segments);
    let mut triangles = Vec::new();
    for s in 0..segments {
        triangles.push([0, ring(1, s), ring(1, s + 1)]);
        triangles.push([south, ring(rings - 1, s + 1), ring(rings - 1, s)]);
    }
    for r in 1..rings - 1 {
        for s in 0..segments {
            let (a, b, c, d) = (ring(r, s), ring(r + 1, s), ring(r + 1, s + 1), ring(r, s + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    IndexedMesh { vertices, triangles }
}

/// Open cylinder along `z` (no caps), embedded mesh.
pub fn cylinder<T: Real>(radius: f64, z0: f64, z1: f64, rings: usize, segments: usize) -> IndexedMesh<T> {
    let mut vertices = Vec::new();
    for r in 0..=rings {
        let z = z0 + (z1 - z0) * r as f64 / rings as f64;
        for s in 0..segments {
            let th = 2.0 * std::f64::consts::PI * s as f64 / segments as f64;
            vertices.push(Vec3::from_f64([radius * th.cos(), radius * th.sin(), z]));
        }
    }
    let idx = |r: usize, s: usize| r * segments + (s % segments);
    let mut triangles = Vec::new();
    for r in 0..rings {
        for s in 0..segments {
            triangles.push([idx(r, s), idx(r, s + 1), idx(r + 1, s + 1)]);
            triangles.push([idx(r, s), idx(r + 1, s + 1), idx(r + 1, s)]);
        }
    }
    IndexedMesh { vertices, triangles }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reference_cages_are_valid() {
        let ico = icosphere::<f64>(2);
        assert_eq!(ico.num_vertices(), 162);
        assert_eq!(ico.num_triangles(), 320);
        assert!(ico.signed_volume() > 4.0 && ico.signed_volume() < 4.19);

        let l = l_cage::<f64>();
        assert_relative_eq!(l.signed_volume(), 3.0, epsilon = 1e-12);
        assert!(!l.orientation_flipped());

        let t = tetrahedron::<f64>();
        assert_relative_eq!(t.signed_volume(), 8.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn embedded_meshes_have_consistent_counts() {
        let s = uv_sphere::<f64>(0.5, Vec3::zero(), 6, 8);
        assert_eq!(s.vertices.len(), 2 + 5 * 8);
        assert_eq!(s.triangles.len(), 2 * 8 + 2 * 8 * 4);
        let c = cylinder::<f64>(0.3, -0.5, 0.5, 4, 10);
        assert_eq!(c.vertices.len(), 50);
    }
}
