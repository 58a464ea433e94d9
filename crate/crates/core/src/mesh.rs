//! Oriented simplicial hypersurfaces.
//!
//! A [`SurfaceMesh`] is either a triangulated surface in ℝ³ (`dim == 2`) or a
//! polyline in ℝ² (`dim == 1`). Curves are stored with a zero third coordinate
//! so that every routine can work with [`Point`] throughout.

use std::collections::HashMap;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::generate::SurfaceSpec;

pub type Point = Vector3<f64>;

/// Smallest admissible face measure (length^n).
pub const EPS_GEOM: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    dim: usize,
    vertices: Vec<Point>,
    /// Flat face list with stride `dim + 1`.
    faces: Vec<usize>,
    boundary: Vec<bool>,
    source: Option<SurfaceSpec>,
}

impl SurfaceMesh {
    /// Builds a mesh and checks every mesh invariant: index ranges, face
    /// measures, manifoldness and consistent orientation. Boundary flags are
    /// derived from the connectivity.
    pub fn new(dim: usize, vertices: Vec<Point>, faces: Vec<usize>) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidMesh(format!("intrinsic dimension must be 1 or 2, got {dim}")));
        }
        let stride = dim + 1;
        if faces.len() % stride != 0 {
            return Err(Error::InvalidMesh(format!(
                "face list length {} is not a multiple of {stride}",
                faces.len()
            )));
        }
        if dim == 1 {
            if let Some(i) = vertices.iter().position(|p| p.z != 0.0) {
                return Err(Error::InvalidMesh(format!(
                    "curve vertex {i} leaves the plane z = 0"
                )));
            }
        }
        let mut referenced = vec![false; vertices.len()];
        for (f, face) in faces.chunks(stride).enumerate() {
            for (a, &i) in face.iter().enumerate() {
                if i >= vertices.len() {
                    return Err(Error::InvalidMesh(format!("face {f} references missing vertex {i}")));
                }
                if face[..a].contains(&i) {
                    return Err(Error::InvalidMesh(format!("face {f} repeats vertex {i}")));
                }
                referenced[i] = true;
            }
            let measure = simplex_measure(&vertices, face);
            if !(measure >= EPS_GEOM) {
                return Err(Error::InvalidMesh(format!(
                    "face {f} has measure {measure:.3e} below {EPS_GEOM:.0e}"
                )));
            }
        }
        if let Some(i) = referenced.iter().position(|r| !r) {
            return Err(Error::InvalidMesh(format!("vertex {i} belongs to no face")));
        }
        let boundary = match dim {
            1 => curve_boundary(vertices.len(), &faces)?,
            _ => surface_boundary(vertices.len(), &faces)?,
        };
        Ok(Self { dim, vertices, faces, boundary, source: None })
    }

    /// Attaches the generator that produced this mesh, so refinement can
    /// project new vertices back onto the smooth surface.
    pub fn with_source(mut self, spec: SurfaceSpec) -> Self {
        self.source = Some(spec);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dimension of the ambient space, `n + 1`.
    pub fn ambient_dim(&self) -> usize {
        self.dim + 1
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &Point {
        &self.vertices[i]
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len() / (self.dim + 1)
    }

    pub fn face(&self, f: usize) -> &[usize] {
        let s = self.dim + 1;
        &self.faces[f * s..(f + 1) * s]
    }

    pub fn faces(&self) -> impl Iterator<Item = &[usize]> + '_ {
        self.faces.chunks(self.dim + 1)
    }

    pub fn face_data(&self) -> &[usize] {
        &self.faces
    }

    pub fn boundary(&self) -> &[bool] {
        &self.boundary
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.boundary[i]
    }

    pub fn is_closed(&self) -> bool {
        !self.boundary.iter().any(|&b| b)
    }

    pub fn interior_vertices(&self) -> Vec<usize> {
        (0..self.n_vertices()).filter(|&i| !self.boundary[i]).collect()
    }

    pub fn source(&self) -> Option<&SurfaceSpec> {
        self.source.as_ref()
    }

    /// Euclidean measure of face `f` (area for triangles, length for segments).
    pub fn face_measure(&self, f: usize) -> f64 {
        simplex_measure(&self.vertices, self.face(f))
    }

    pub fn total_measure(&self) -> f64 {
        (0..self.n_faces()).map(|f| self.face_measure(f)).sum()
    }

    /// Longest edge length.
    pub fn max_edge_length(&self) -> f64 {
        self.edges()
            .iter()
            .map(|&(a, b)| (self.vertices[a] - self.vertices[b]).norm())
            .fold(0.0, f64::max)
    }

    pub fn mean_edge_length(&self) -> f64 {
        let edges = self.edges();
        if edges.is_empty() {
            return 0.0;
        }
        edges.iter().map(|&(a, b)| (self.vertices[a] - self.vertices[b]).norm()).sum::<f64>()
            / edges.len() as f64
    }

    /// Unique undirected edges `(a, b)` with `a < b`, in first-seen order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut seen = HashMap::new();
        let mut out = Vec::new();
        for face in self.faces() {
            let k = face.len();
            let pairs = if k == 2 { 1 } else { k };
            for e in 0..pairs {
                let (a, b) = (face[e], face[(e + 1) % k]);
                let key = (a.min(b), a.max(b));
                if seen.insert(key, ()).is_none() {
                    out.push(key);
                }
            }
        }
        out
    }

    /// Sorted one-ring neighbor lists.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_vertices()];
        for (a, b) in self.edges() {
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Incident faces per vertex.
    pub fn vertex_faces(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_vertices()];
        for (f, face) in self.faces().enumerate() {
            for &i in face {
                out[i].push(f);
            }
        }
        out
    }

    /// Replaces vertex positions, keeping connectivity. Used by refinement
    /// and by tests that perturb meshes.
    pub fn with_vertices(&self, vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::InvalidMesh("vertex count changed".into()));
        }
        let mut mesh = Self::new(self.dim, vertices, self.faces.clone())?;
        mesh.source = None;
        Ok(mesh)
    }

    /// Translates every vertex by `shift`.
    pub fn translated(&self, shift: Point) -> Result<Self> {
        if self.dim == 1 && shift.z != 0.0 {
            return Err(Error::InvalidInput("curves can only be shifted within z = 0".into()));
        }
        self.with_vertices(self.vertices.iter().map(|p| p + shift).collect())
    }
}

/// Measure of the simplex spanned by `face` (length or area).
pub fn simplex_measure(vertices: &[Point], face: &[usize]) -> f64 {
    match face.len() {
        2 => (vertices[face[1]] - vertices[face[0]]).norm(),
        3 => {
            let (a, b, c) = (vertices[face[0]], vertices[face[1]], vertices[face[2]]);
            0.5 * (b - a).cross(&(c - a)).norm()
        }
        _ => 0.0,
    }
}

fn surface_boundary(n: usize, faces: &[usize]) -> Result<Vec<bool>> {
    // Directed edge -> owning face. Each directed edge may occur once; an
    // interior edge must be traversed once in each direction.
    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    for (f, tri) in faces.chunks(3).enumerate() {
        for e in 0..3 {
            let (a, b) = (tri[e], tri[(e + 1) % 3]);
            if let Some(g) = directed.insert((a, b), f) {
                return Err(Error::InvalidMesh(format!(
                    "edge ({a},{b}) traversed in the same direction by faces {g} and {f} (inconsistent orientation or non-manifold edge)"
                )));
            }
        }
    }
    let mut boundary = vec![false; n];
    for &(a, b) in directed.keys() {
        if !directed.contains_key(&(b, a)) {
            boundary[a] = true;
            boundary[b] = true;
        }
    }
    Ok(boundary)
}

fn curve_boundary(n: usize, segments: &[usize]) -> Result<Vec<bool>> {
    let mut outgoing = vec![0usize; n];
    let mut incoming = vec![0usize; n];
    for seg in segments.chunks(2) {
        outgoing[seg[0]] += 1;
        incoming[seg[1]] += 1;
    }
    let mut boundary = vec![false; n];
    for i in 0..n {
        if outgoing[i] > 1 || incoming[i] > 1 {
            return Err(Error::InvalidMesh(format!(
                "vertex {i} has inconsistent segment orientation or more than two segments"
            )));
        }
        boundary[i] = outgoing[i] + incoming[i] == 1;
    }
    Ok(boundary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> SurfaceMesh {
        let v = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(1.0, 1.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(0.5, 0.5, 0.0),
        ];
        let f = vec![0, 1, 4, 1, 2, 4, 2, 3, 4, 3, 0, 4];
        SurfaceMesh::new(2, v, f).unwrap()
    }

    #[test]
    fn boundary_flags_follow_single_face_edges() {
        let m = square();
        assert_eq!(m.boundary(), &[true, true, true, true, false]);
        assert_eq!(m.interior_vertices(), vec![4]);
        assert!((m.total_measure() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn flipped_face_is_rejected() {
        let v = square().vertices().to_vec();
        let f = vec![0, 1, 4, 1, 2, 4, 2, 3, 4, 0, 3, 4];
        let err = SurfaceMesh::new(2, v, f).unwrap_err();
        assert!(matches!(err, Error::InvalidMesh(_)));
    }

    #[test]
    fn degenerate_face_is_rejected() {
        let v = vec![Point::new(0.0, 0.0, 0.0), Point::new(1.0, 0.0, 0.0), Point::new(2.0, 0.0, 0.0)];
        assert!(SurfaceMesh::new(2, v, vec![0, 1, 2]).is_err());
    }

    #[test]
    fn curve_orientation_and_boundary() {
        let v = vec![Point::new(0.0, 0.0, 0.0), Point::new(1.0, 0.0, 0.0), Point::new(2.0, 0.0, 0.0)];
        let m = SurfaceMesh::new(1, v.clone(), vec![0, 1, 1, 2]).unwrap();
        assert_eq!(m.boundary(), &[true, false, true]);
        assert!(SurfaceMesh::new(1, v, vec![0, 1, 2, 1]).is_err());
    }

    #[test]
    fn neighbors_are_symmetric() {
        let m = square();
        let adj = m.neighbors();
        assert_eq!(adj[4], vec![0, 1, 2, 3]);
        for (i, list) in adj.iter().enumerate() {
            for &j in list {
                assert!(adj[j].contains(&i));
            }
        }
    }
}
