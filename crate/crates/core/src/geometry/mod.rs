//! Triangle surface meshes and the RWG edge basis built on them.

mod generate;
mod gmsh;

pub use generate::{make_surface, GeometryKind, GeometrySpec, Region};
pub use gmsh::{export_gmsh, import_gmsh, read_gmsh, read_native, write_gmsh, write_native};

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::vec3::Vec3;

/// Flat triangle surface mesh.
///
/// Triangles are stored counter-clockwise as seen from the side the normal
/// points to (from the lower medium into the upper one).
#[derive(Debug, Clone)]
pub struct TriangleMesh<T> {
    vertices: Vec<Vec3<T>>,
    triangles: Vec<[usize; 3]>,
    normals: Vec<Vec3<T>>,
    areas: Vec<T>,
    centroids: Vec<Vec3<T>>,
    diameters: Vec<T>,
    plane_group: Vec<u32>,
}

/// Marker for triangles that share no plane with any other triangle.
pub const NO_PLANE_GROUP: u32 = u32::MAX;

impl<T: Real> TriangleMesh<T> {
    pub fn new(vertices: Vec<Vec3<T>>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let nv = vertices.len();
        let mut normals = Vec::with_capacity(triangles.len());
        let mut areas = Vec::with_capacity(triangles.len());
        let mut centroids = Vec::with_capacity(triangles.len());
        let mut diameters = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= nv) {
                return Err(Error::Structural(format!(
                    "triangle {t} references a vertex outside 0..{nv}"
                )));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::Structural(format!(
                    "triangle {t} has repeated vertices {tri:?}"
                )));
            }
            let [a, b, c] = tri.map(|i| vertices[i]);
            let cr = (b - a).cross(c - a);
            let twice_area = cr.norm();
            if !(twice_area > T::zero()) {
                return Err(Error::Structural(format!("triangle {t} has zero area")));
            }
            normals.push(cr / twice_area);
            areas.push(twice_area * T::lit(0.5));
            centroids.push((a + b + c) / T::lit(3.0));
            diameters.push((b - a).norm().max((c - b).norm()).max((a - c).norm()));
        }
        let plane_group = plane_groups(&vertices, &triangles, &normals);
        Ok(Self {
            vertices,
            triangles,
            normals,
            areas,
            centroids,
            diameters,
            plane_group,
        })
    }

    pub fn vertices(&self) -> &[Vec3<T>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    #[inline]
    pub fn normal(&self, t: usize) -> Vec3<T> {
        self.normals[t]
    }

    #[inline]
    pub fn area(&self, t: usize) -> T {
        self.areas[t]
    }

    #[inline]
    pub fn centroid(&self, t: usize) -> Vec3<T> {
        self.centroids[t]
    }

    /// Longest edge of the triangle.
    #[inline]
    pub fn diameter(&self, t: usize) -> T {
        self.diameters[t]
    }

    #[inline]
    pub fn corners(&self, t: usize) -> [Vec3<T>; 3] {
        self.triangles[t].map(|i| self.vertices[i])
    }

    pub fn total_area(&self) -> T {
        self.areas.iter().copied().sum()
    }

    pub fn max_diameter(&self) -> T {
        self.diameters.iter().copied().fold(T::zero(), T::max)
    }

    /// Identifier of the plane the triangle lies in; triangles with equal
    /// ids (other than [`NO_PLANE_GROUP`]) are coplanar.
    #[inline]
    pub fn plane_group(&self, t: usize) -> u32 {
        self.plane_group[t]
    }

    #[inline]
    pub fn coplanar(&self, t: usize, s: usize) -> bool {
        let g = self.plane_group[t];
        g != NO_PLANE_GROUP && g == self.plane_group[s]
    }

    /// Same mesh with every triangle winding reversed.
    pub fn flipped(&self) -> Self {
        let tris = self.triangles.iter().map(|&[a, b, c]| [a, c, b]).collect();
        // Reversing the winding cannot invalidate an already valid mesh.
        Self::new(self.vertices.clone(), tris).expect("flipped mesh is valid")
    }

    /// Euclidean distance from `p` to the closest point of the surface.
    pub fn distance_to(&self, p: Vec3<T>) -> T {
        (0..self.num_triangles())
            .map(|t| point_triangle_distance(p, self.corners(t)))
            .fold(T::infinity(), T::min)
    }

    /// Number of distinct edges and number of boundary edges.
    pub fn edge_counts(&self) -> (usize, usize) {
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &self.triangles {
            for i in 0..3 {
                let (a, b) = (tri[i], tri[(i + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let boundary = count.values().filter(|&&c| c == 1).count();
        (count.len(), boundary)
    }
}

fn plane_groups<T: Real>(
    vertices: &[Vec3<T>],
    triangles: &[[usize; 3]],
    normals: &[Vec3<T>],
) -> Vec<u32> {
    let scale = vertices
        .iter()
        .fold(T::zero(), |m, v| m.max(v.x.abs()).max(v.y.abs()).max(v.z.abs()))
        .max(T::min_positive_value());
    let quant = T::lit(1e9);
    let mut keys = Vec::with_capacity(triangles.len());
    let mut seen: HashMap<[i64; 4], (u32, usize)> = HashMap::new();
    for (t, tri) in triangles.iter().enumerate() {
        let mut n = normals[t];
        let first = if n.x != T::zero() {
            n.x
        } else if n.y != T::zero() {
            n.y
        } else {
            n.z
        };
        if first < T::zero() {
            n = -n;
        }
        let d = n.dot(vertices[tri[0]]) / scale;
        let q = |x: T| (x * quant).round().to_i64().unwrap_or(i64::MAX);
        let key = [q(n.x), q(n.y), q(n.z), q(d)];
        let next = seen.len() as u32;
        let e = seen.entry(key).or_insert((next, 0));
        e.1 += 1;
        keys.push(key);
    }
    keys.iter()
        .map(|k| {
            let (id, count) = seen[k];
            if count > 1 {
                id
            } else {
                NO_PLANE_GROUP
            }
        })
        .collect()
}

/// Distance from `p` to a triangle (closest-point construction).
pub fn point_triangle_distance<T: Real>(p: Vec3<T>, tri: [Vec3<T>; 3]) -> T {
    let [a, b, c] = tri;
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= T::zero() && d2 <= T::zero() {
        return ap.norm();
    }
    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= T::zero() && d4 <= d3 {
        return bp.norm();
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= T::zero() && d1 >= T::zero() && d3 <= T::zero() {
        let v = d1 / (d1 - d3);
        return (p - (a + ab * v)).norm();
    }
    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= T::zero() && d5 <= d6 {
        return cp.norm();
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= T::zero() && d2 >= T::zero() && d6 <= T::zero() {
        let w = d2 / (d2 - d6);
        return (p - (a + ac * w)).norm();
    }
    let va = d3 * d6 - d5 * d4;
    if va <= T::zero() && (d4 - d3) >= T::zero() && (d5 - d6) >= T::zero() {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (p - (b + (c - b) * w)).norm();
    }
    let denom = T::one() / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (p - (a + ab * v + ac * w)).norm()
}

/// One RWG basis function: an interior edge and its two triangles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RwgEdge<T> {
    pub vertices: [usize; 2],
    /// Triangle the current flows out of.
    pub plus: usize,
    /// Triangle the current flows into.
    pub minus: usize,
    /// Local index (0..3) of the edge in the plus triangle; the free vertex
    /// of the plus triangle has the same local index.
    pub plus_local: usize,
    pub minus_local: usize,
    pub length: T,
}

/// Reference from a triangle-local edge to its basis function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalBasis {
    pub index: usize,
    /// +1 on the plus triangle, -1 on the minus triangle.
    pub sign: i8,
}

/// Div-conforming RWG basis with the standard edge-length normalisation:
/// `f(r) = +-l/(2A) (r - p)` where `p` is the free vertex.
#[derive(Debug, Clone)]
pub struct RwgBasis<T> {
    edges: Vec<RwgEdge<T>>,
    by_triangle: Vec<[Option<LocalBasis>; 3]>,
}

/// Local edge `i` of `[a, b, c]` is the one opposite vertex `i`.
#[inline]
pub fn local_edge(tri: &[usize; 3], i: usize) -> (usize, usize) {
    (tri[(i + 1) % 3], tri[(i + 2) % 3])
}

impl<T: Real> RwgBasis<T> {
    pub fn new(mesh: &TriangleMesh<T>) -> Result<Self> {
        build_rwg_basis(mesh)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edges(&self) -> &[RwgEdge<T>] {
        &self.edges
    }

    pub fn edge(&self, n: usize) -> &RwgEdge<T> {
        &self.edges[n]
    }

    /// Basis functions supported on triangle `t`, by local edge index.
    #[inline]
    pub fn on_triangle(&self, t: usize) -> &[Option<LocalBasis>; 3] {
        &self.by_triangle[t]
    }

    /// Surface divergence of basis `n` on triangle `t` (zero off support).
    pub fn divergence(&self, mesh: &TriangleMesh<T>, n: usize, t: usize) -> T {
        let e = &self.edges[n];
        if t == e.plus {
            e.length / mesh.area(t)
        } else if t == e.minus {
            -e.length / mesh.area(t)
        } else {
            T::zero()
        }
    }

    /// Value of basis `n` at a point `r` of triangle `t`.
    pub fn value(&self, mesh: &TriangleMesh<T>, n: usize, t: usize, r: Vec3<T>) -> Vec3<T> {
        let e = &self.edges[n];
        let (local, sign) = if t == e.plus {
            (e.plus_local, T::one())
        } else if t == e.minus {
            (e.minus_local, -T::one())
        } else {
            return Vec3::zero();
        };
        let p = mesh.vertices()[mesh.triangles()[t][local]];
        (r - p) * (sign * e.length / (T::lit(2.0) * mesh.area(t)))
    }
}

/// Builds one basis function per interior edge.
pub fn build_rwg_basis<T: Real>(mesh: &TriangleMesh<T>) -> Result<RwgBasis<T>> {
    // edge key -> (triangle, local index) occurrences
    let mut seen: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
    let mut order = Vec::new();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        for i in 0..3 {
            let (a, b) = local_edge(tri, i);
            let key = (a.min(b), a.max(b));
            let entry = seen.entry(key).or_default();
            if entry.is_empty() {
                order.push(key);
            }
            entry.push((t, i));
        }
    }
    let mut edges = Vec::new();
    let mut by_triangle = vec![[None; 3]; mesh.num_triangles()];
    for key in order {
        let occ = &seen[&key];
        match occ.len() {
            1 => {}
            2 => {
                let (plus, plus_local) = occ[0];
                let (minus, minus_local) = occ[1];
                let index = edges.len();
                edges.push(RwgEdge {
                    vertices: [key.0, key.1],
                    plus,
                    minus,
                    plus_local,
                    minus_local,
                    length: (mesh.vertices()[key.0] - mesh.vertices()[key.1]).norm(),
                });
                by_triangle[plus][plus_local] = Some(LocalBasis { index, sign: 1 });
                by_triangle[minus][minus_local] = Some(LocalBasis { index, sign: -1 });
            }
            k => {
                return Err(Error::Structural(format!(
                    "non-manifold edge ({}, {}) shared by {k} triangles",
                    key.0, key.1
                )))
            }
        }
    }
    Ok(RwgBasis { edges, by_triangle })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn icosahedron() -> TriangleMesh<f64> {
        let p = (1.0 + 5f64.sqrt()) / 2.0;
        let v = [
            [-1.0, p, 0.0],
            [1.0, p, 0.0],
            [-1.0, -p, 0.0],
            [1.0, -p, 0.0],
            [0.0, -1.0, p],
            [0.0, 1.0, p],
            [0.0, -1.0, -p],
            [0.0, 1.0, -p],
            [p, 0.0, -1.0],
            [p, 0.0, 1.0],
            [-p, 0.0, -1.0],
            [-p, 0.0, 1.0],
        ];
        let f = vec![
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
        TriangleMesh::new(v.iter().map(|&a| Vec3::from_f64(a)).collect(), f).unwrap()
    }

    fn two_triangles() -> TriangleMesh<f64> {
        let v = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
        ];
        TriangleMesh::new(v, vec![[0, 1, 2], [1, 3, 2]]).unwrap()
    }

    #[test]
    fn icosahedron_has_thirty_edges() {
        let m = icosahedron();
        let b = build_rwg_basis(&m).unwrap();
        assert_eq!(b.len(), 30);
        assert_eq!(b.len() * 2, 3 * m.num_triangles());
        // outward normals
        for t in 0..m.num_triangles() {
            assert!(m.normal(t).dot(m.centroid(t)) > 0.0);
        }
    }

    #[test]
    fn two_triangles_one_edge() {
        let m = two_triangles();
        let b = build_rwg_basis(&m).unwrap();
        assert_eq!(b.len(), 1);
        let e = b.edge(0);
        assert_eq!(e.vertices, [1, 2]);
        assert!((e.length - 2f64.sqrt()).abs() < 1e-15);
        assert!(m.coplanar(0, 1));
    }

    #[test]
    fn non_manifold_edge_is_rejected() {
        let v = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, -1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        let m = TriangleMesh::new(v, vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]]).unwrap();
        let err = build_rwg_basis(&m).unwrap_err();
        assert!(matches!(err, Error::Structural(ref s) if s.contains("(0, 1)")), "{err}");
    }

    #[test]
    fn degenerate_triangles_are_rejected() {
        let v = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
        ];
        assert!(TriangleMesh::new(v.clone(), vec![[0, 1, 2]]).is_err());
        assert!(TriangleMesh::new(v, vec![[0, 1, 1]]).is_err());
    }

    #[test]
    fn divergence_integrates_to_zero() {
        let m = icosahedron();
        let b = build_rwg_basis(&m).unwrap();
        for n in 0..b.len() {
            let e = b.edge(n);
            let total = b.divergence(&m, n, e.plus) * m.area(e.plus)
                + b.divergence(&m, n, e.minus) * m.area(e.minus);
            assert!(total.abs() < 1e-14);
        }
    }

    #[test]
    fn normal_component_continuous_across_edge() {
        let m = icosahedron();
        let b = build_rwg_basis(&m).unwrap();
        for n in 0..b.len() {
            let e = b.edge(n);
            let [va, vb] = e.vertices.map(|i| m.vertices()[i]);
            let mid = (va + vb) * 0.5;
            let along = (vb - va).normalized();
            let fp = b.value(&m, n, e.plus, mid);
            let fm = b.value(&m, n, e.minus, mid);
            // edge-normal within each triangle plane
            let np = m.normal(e.plus).cross(along);
            let nm = m.normal(e.minus).cross(along);
            let flux_p = fp.dot(np).abs();
            let flux_m = fm.dot(nm).abs();
            assert!((flux_p - 1.0).abs() < 1e-12, "unit flux density {flux_p}");
            assert!((flux_p - flux_m).abs() < 1e-12);
        }
    }

    #[test]
    fn flipping_flips_normals() {
        let m = icosahedron();
        let f = m.flipped();
        for t in 0..m.num_triangles() {
            assert!((m.normal(t) + f.normal(t)).norm() < 1e-15);
        }
    }

    #[test]
    fn point_triangle_distance_regions() {
        let tri: [Vec3<f64>; 3] = [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ];
        let d = |p: [f64; 3]| point_triangle_distance(Vec3::from_f64(p), tri);
        assert!((d([0.2, 0.2, 0.5]) - 0.5).abs() < 1e-15);
        assert!((d([-1.0, -1.0, 0.0]) - 2f64.sqrt()).abs() < 1e-15);
        assert!((d([0.5, -2.0, 0.0]) - 2.0).abs() < 1e-15);
        assert!((d([1.0, 1.0, 0.0]) - 0.5f64.sqrt()).abs() < 1e-15);
    }
}
