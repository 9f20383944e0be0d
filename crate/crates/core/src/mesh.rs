//! Indexed triangle meshes with oriented boundary loops.
//!
//! A [`TriMesh`] is validated on construction: faces are consistently
//! oriented (counterclockwise in the plane for planar input), the mesh is a
//! connected genus-0 manifold, and its boundary is split into closed loops
//! with the outermost loop first.

use std::collections::{HashMap, VecDeque};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Relative tolerance below which a face area counts as zero.
const DEGENERATE_AREA: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<[f64; 3]>,
    faces: Vec<[usize; 3]>,
    boundary_loops: Vec<Vec<usize>>,
}

/// Placement of a boundary vertex relative to the current target circles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryVertexInfo {
    pub loop_index: usize,
    pub position_in_loop: usize,
    /// Unit tangent of the image circle at the vertex's current image.
    pub tangent: C64,
}

impl TriMesh {
    /// Builds a validated mesh. Face orientation is made consistent and, for
    /// planar input, counterclockwise.
    pub fn new(vertices: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::Topology("mesh has no faces".into()));
        }
        let n = vertices.len();
        for (j, f) in faces.iter().enumerate() {
            if f.iter().any(|&v| v >= n) {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("face {j} references a vertex out of range"),
                });
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::Degenerate { face: j });
            }
        }
        if vertices.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Parse { line: 0, message: "non-finite vertex coordinate".into() });
        }

        let scale = bbox_diagonal(&vertices).max(f64::MIN_POSITIVE);
        for (j, f) in faces.iter().enumerate() {
            if area_3d(&vertices, f) <= DEGENERATE_AREA * scale * scale {
                return Err(Error::Degenerate { face: j });
            }
        }

        let mut faces = faces;
        orient_consistently(&mut faces)?;
        check_connected(n, &faces)?;

        let mut mesh = TriMesh { vertices, faces, boundary_loops: Vec::new() };
        if mesh.is_planar() {
            let pts = mesh.positions();
            let total: f64 = mesh.faces.iter().map(|f| signed_area(&pts, f)).sum();
            if total < 0.0 {
                for f in &mut mesh.faces {
                    f.swap(1, 2);
                }
            }
            if let Some(j) = mesh.faces.iter().position(|f| signed_area(&pts, f) <= 0.0) {
                return Err(Error::Topology(format!(
                    "planar mesh folds over itself at face {j}"
                )));
            }
        }

        mesh.boundary_loops = extract_boundary_loops(&mesh)?;
        if mesh.boundary_loops.is_empty() {
            return Err(Error::Topology("closed surfaces are not supported".into()));
        }
        let edges = edge_count(&mesh.faces);
        let chi = mesh.vertices.len() as i64 - edges as i64 + mesh.faces.len() as i64;
        let genus2 = 2 - mesh.boundary_loops.len() as i64 - chi;
        if genus2 != 0 {
            return Err(Error::Topology(format!(
                "surface has genus {}; only genus 0 is supported",
                genus2 / 2
            )));
        }
        if mesh.is_planar() {
            let pts = mesh.positions();
            for (k, lp) in mesh.boundary_loops.iter().enumerate() {
                let a = polygon_signed_area(lp.iter().map(|&v| pts[v]));
                if (k == 0) != (a > 0.0) {
                    return Err(Error::Topology(format!(
                        "boundary loop {k} has unexpected orientation"
                    )));
                }
            }
        }
        Ok(mesh)
    }

    /// Planar mesh from complex vertex positions.
    pub fn from_planar(points: &[C64], faces: Vec<[usize; 3]>) -> Result<Self> {
        let vertices = points.iter().map(|p| [p.re, p.im, 0.0]).collect();
        Self::new(vertices, faces)
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    /// Loop 0 is the outer boundary, the rest are inner loops.
    pub fn boundary_loops(&self) -> &[Vec<usize>] {
        &self.boundary_loops
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn inner_loop_count(&self) -> usize {
        self.boundary_loops.len() - 1
    }

    /// True when every vertex lies in the z = 0 plane.
    pub fn is_planar(&self) -> bool {
        let scale = bbox_diagonal(&self.vertices);
        self.vertices.iter().all(|v| v[2].abs() <= 1e-12 * scale.max(1.0))
    }

    /// xy-coordinates as complex numbers.
    pub fn positions(&self) -> Vec<C64> {
        self.vertices.iter().map(|v| C64::new(v[0], v[1])).collect()
    }

    /// Unsigned planar face areas.
    pub fn face_areas(&self) -> Vec<f64> {
        let pts = self.positions();
        self.faces.iter().map(|f| signed_area(&pts, f).abs()).collect()
    }

    pub fn total_area(&self) -> f64 {
        self.face_areas().iter().sum()
    }

    /// Boundary membership per vertex: `Some((loop, position))` or `None` for
    /// interior vertices.
    pub fn boundary_membership(&self) -> Vec<Option<(usize, usize)>> {
        let mut out = vec![None; self.vertices.len()];
        for (k, lp) in self.boundary_loops.iter().enumerate() {
            for (p, &v) in lp.iter().enumerate() {
                out[v] = Some((k, p));
            }
        }
        out
    }

    pub fn interior_vertices(&self) -> Vec<usize> {
        self.boundary_membership()
            .iter()
            .enumerate()
            .filter_map(|(v, b)| b.is_none().then_some(v))
            .collect()
    }

    /// Boundary vertices in loop order, outer loop first.
    pub fn boundary_vertices(&self) -> Vec<usize> {
        self.boundary_loops.iter().flatten().copied().collect()
    }

    /// Tangent information for every boundary vertex, derived from the
    /// current image `map` and the circle centers (`centers[0]` is the outer
    /// circle's center). Returned in [`Self::boundary_vertices`] order.
    pub fn boundary_vertex_info(
        &self,
        map: &[C64],
        centers: &[C64],
    ) -> Result<Vec<BoundaryVertexInfo>> {
        let mut out = Vec::with_capacity(self.boundary_vertices().len());
        for (k, lp) in self.boundary_loops.iter().enumerate() {
            for (p, &v) in lp.iter().enumerate() {
                let radial = map[v] - centers[k];
                let len = radial.norm();
                if !(len > 1e-300) {
                    return Err(Error::UndefinedTangent { vertex: v });
                }
                out.push(BoundaryVertexInfo {
                    loop_index: k,
                    position_in_loop: p,
                    tangent: C64::i() * radial / len,
                });
            }
        }
        Ok(out)
    }
}

/// Signed area of a triangle; positive when counterclockwise.
pub fn signed_area(points: &[C64], f: &[usize; 3]) -> f64 {
    let a = points[f[1]] - points[f[0]];
    let b = points[f[2]] - points[f[0]];
    0.5 * (a.re * b.im - a.im * b.re)
}

pub fn polygon_signed_area(points: impl IntoIterator<Item = C64>) -> f64 {
    let pts: Vec<C64> = points.into_iter().collect();
    let n = pts.len();
    (0..n)
        .map(|i| {
            let (p, q) = (pts[i], pts[(i + 1) % n]);
            p.re * q.im - q.re * p.im
        })
        .sum::<f64>()
        * 0.5
}

/// Number of faces whose image under `map` has non-positive signed area.
pub fn flip_count(mesh: &TriMesh, map: &[C64]) -> usize {
    mesh.faces().iter().filter(|f| signed_area(map, f) <= 0.0).count()
}

/// Boundary loops of an oriented manifold mesh, outer loop first and inner
/// loops by descending enclosed area. Each loop starts at its smallest
/// vertex index and follows the face orientation.
pub fn extract_boundary_loops(mesh: &TriMesh) -> Result<Vec<Vec<usize>>> {
    let mut undirected: HashMap<(usize, usize), usize> = HashMap::new();
    for f in &mesh.faces {
        for e in 0..3 {
            let (a, b) = (f[e], f[(e + 1) % 3]);
            *undirected.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let mut next: HashMap<usize, usize> = HashMap::new();
    for f in &mesh.faces {
        for e in 0..3 {
            let (a, b) = (f[e], f[(e + 1) % 3]);
            if undirected[&(a.min(b), a.max(b))] == 1 && next.insert(a, b).is_some() {
                return Err(Error::NonManifold(format!("vertex {a} is pinched on the boundary")));
            }
        }
    }

    let mut starts: Vec<usize> = next.keys().copied().collect();
    starts.sort_unstable();
    let mut visited = vec![false; mesh.vertices.len()];
    let mut loops = Vec::new();
    for s in starts {
        if visited[s] {
            continue;
        }
        let mut lp = vec![s];
        visited[s] = true;
        let mut v = s;
        loop {
            let Some(&w) = next.get(&v) else {
                return Err(Error::NonManifold("open boundary chain".into()));
            };
            if w == s {
                break;
            }
            if visited[w] {
                return Err(Error::NonManifold(format!("boundary revisits vertex {w}")));
            }
            visited[w] = true;
            lp.push(w);
            v = w;
        }
        if lp.len() < 3 {
            return Err(Error::NonManifold("boundary loop shorter than 3 vertices".into()));
        }
        loops.push(lp);
    }

    let areas: Vec<f64> = loops.iter().map(|lp| loop_vector_area(&mesh.vertices, lp)).collect();
    let mut order: Vec<usize> = (0..loops.len()).collect();
    // starts were sorted, so loops[i][0] is increasing; stable sort keeps that tie-break
    order.sort_by(|&a, &b| areas[b].total_cmp(&areas[a]));
    Ok(order.into_iter().map(|i| std::mem::take(&mut loops[i])).collect())
}

/// Magnitude of the vector area of a closed polygon in 3D.
fn loop_vector_area(vertices: &[[f64; 3]], lp: &[usize]) -> f64 {
    let mut acc = [0.0; 3];
    for i in 0..lp.len() {
        let p = vertices[lp[i]];
        let q = vertices[lp[(i + 1) % lp.len()]];
        acc[0] += p[1] * q[2] - p[2] * q[1];
        acc[1] += p[2] * q[0] - p[0] * q[2];
        acc[2] += p[0] * q[1] - p[1] * q[0];
    }
    0.5 * (acc[0] * acc[0] + acc[1] * acc[1] + acc[2] * acc[2]).sqrt()
}

fn area_3d(v: &[[f64; 3]], f: &[usize; 3]) -> f64 {
    let a = sub(v[f[1]], v[f[0]]);
    let b = sub(v[f[2]], v[f[0]]);
    0.5 * norm(cross(a, b))
}

pub(crate) fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn bbox_diagonal(vertices: &[[f64; 3]]) -> f64 {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for v in vertices {
        for i in 0..3 {
            lo[i] = lo[i].min(v[i]);
            hi[i] = hi[i].max(v[i]);
        }
    }
    if vertices.is_empty() {
        0.0
    } else {
        norm(sub(hi, lo))
    }
}

fn edge_count(faces: &[[usize; 3]]) -> usize {
    let mut edges: Vec<(usize, usize)> = faces
        .iter()
        .flat_map(|f| (0..3).map(move |e| (f[e].min(f[(e + 1) % 3]), f[e].max(f[(e + 1) % 3]))))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    edges.len()
}

/// Flips faces so that every interior edge is traversed in opposite
/// directions by its two faces.
fn orient_consistently(faces: &mut [[usize; 3]]) -> Result<()> {
    let mut edge_faces: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (j, f) in faces.iter().enumerate() {
        for e in 0..3 {
            let (a, b) = (f[e], f[(e + 1) % 3]);
            edge_faces.entry((a.min(b), a.max(b))).or_default().push(j);
        }
    }
    if let Some((e, _)) = edge_faces.iter().find(|(_, fs)| fs.len() > 2) {
        return Err(Error::NonManifold(format!("edge ({}, {}) is shared by more than two faces", e.0, e.1)));
    }

    let directed = |f: &[usize; 3], a: usize, b: usize| -> bool {
        (0..3).any(|e| f[e] == a && f[(e + 1) % 3] == b)
    };

    let mut state = vec![0u8; faces.len()]; // 0 unvisited, 1 visited
    for seed in 0..faces.len() {
        if state[seed] != 0 {
            continue;
        }
        state[seed] = 1;
        let mut queue = VecDeque::from([seed]);
        while let Some(j) = queue.pop_front() {
            let f = faces[j];
            for e in 0..3 {
                let (a, b) = (f[e], f[(e + 1) % 3]);
                for &k in &edge_faces[&(a.min(b), a.max(b))] {
                    if k == j {
                        continue;
                    }
                    let same_dir = directed(&faces[k], a, b);
                    if state[k] == 0 {
                        if same_dir {
                            faces[k].swap(1, 2);
                        }
                        state[k] = 1;
                        queue.push_back(k);
                    } else if same_dir {
                        return Err(Error::NonOrientable);
                    }
                }
            }
        }
    }
    Ok(())
}

fn check_connected(n: usize, faces: &[[usize; 3]]) -> Result<()> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for f in faces {
        for e in 0..3 {
            let (a, b) = (find(&mut parent, f[e]), find(&mut parent, f[(e + 1) % 3]));
            if a != b {
                parent[a] = b;
            }
        }
    }
    let components = (0..n).filter(|&v| find(&mut parent, v) == v).count();
    if components != 1 {
        return Err(Error::Disconnected { components });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> TriMesh {
        let pts = [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 1.0), C64::new(0.0, 1.0)];
        TriMesh::from_planar(&pts, vec![[0, 1, 2], [0, 2, 3]]).unwrap()
    }

    #[test]
    fn single_triangle_has_one_loop() {
        let pts = [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0)];
        let m = TriMesh::from_planar(&pts, vec![[0, 1, 2]]).unwrap();
        assert_eq!(m.boundary_loops(), &[vec![0, 1, 2]]);
        assert!(m.interior_vertices().is_empty());
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let pts = [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 1.0), C64::new(0.0, 1.0)];
        let m = TriMesh::from_planar(&pts, vec![[0, 2, 1], [0, 3, 2]]).unwrap();
        let p = m.positions();
        assert!(m.faces().iter().all(|f| signed_area(&p, f) > 0.0));
        assert_eq!(m.boundary_loops()[0], vec![0, 1, 2, 3]);
    }

    #[test]
    fn mixed_orientation_is_made_consistent() {
        let pts = [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 1.0), C64::new(0.0, 1.0)];
        let m = TriMesh::from_planar(&pts, vec![[0, 1, 2], [0, 3, 2]]).unwrap();
        assert_eq!(flip_count(&m, &m.positions()), 0);
    }

    #[test]
    fn reflection_flips_every_face() {
        let m = square();
        let conj: Vec<C64> = m.positions().iter().map(|z| z.conj()).collect();
        assert_eq!(flip_count(&m, &m.positions()), 0);
        assert_eq!(flip_count(&m, &conj), m.face_count());
    }

    #[test]
    fn rejects_degenerate_face() {
        let pts = [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(2.0, 0.0)];
        let err = TriMesh::from_planar(&pts, vec![[0, 1, 2]]).unwrap_err();
        assert!(matches!(err, Error::Degenerate { face: 0 }));
    }

    #[test]
    fn rejects_edge_with_three_faces() {
        let pts = [
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.5, 1.0),
            C64::new(0.5, -1.0),
            C64::new(0.5, 2.0),
        ];
        let v: Vec<[f64; 3]> = pts.iter().map(|p| [p.re, p.im, 0.0]).collect();
        let mut v = v;
        v[4][2] = 1.0;
        let err = TriMesh::new(v, vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]]).unwrap_err();
        assert!(matches!(err, Error::NonManifold(_)));
    }

    #[test]
    fn rejects_disconnected() {
        let pts = [
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 1.0),
            C64::new(5.0, 0.0),
            C64::new(6.0, 0.0),
            C64::new(5.0, 1.0),
        ];
        let err = TriMesh::from_planar(&pts, vec![[0, 1, 2], [3, 4, 5]]).unwrap_err();
        assert!(matches!(err, Error::Disconnected { components: 2 }));
    }

    #[test]
    fn rejects_closed_surface() {
        // tetrahedron
        let v = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let f = vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]];
        assert!(matches!(TriMesh::new(v, f), Err(Error::Topology(_))));
    }

    #[test]
    fn tangent_is_unit_and_counterclockwise() {
        let m = square();
        let info = m.boundary_vertex_info(&m.positions(), &[C64::new(0.5, 0.5)]).unwrap();
        assert_eq!(info.len(), 4);
        for (i, b) in info.iter().enumerate() {
            assert!((b.tangent.norm() - 1.0).abs() < 1e-12);
            assert_eq!(b.position_in_loop, i);
        }
        // at (0,0) relative to center (-.5,-.5) the ccw tangent is (.5,-.5)/|.|
        let t = info[0].tangent;
        assert!((t - C64::new(1.0, -1.0) / 2f64.sqrt()).norm() < 1e-12);
    }
}
