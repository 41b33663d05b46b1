//! Closed oriented triangle meshes in R^3, the surface (n = 2) backend.
//!
//! `TriMesh` owns connectivity and enforces the structural invariants at
//! construction: every edge shared by exactly two faces with opposite
//! directions, no degenerate triangles, finite coordinates. Differential
//! quantities live in `MeshGeometry`, computed once per mesh.

pub mod generate;
pub mod geometry;
pub mod io;
pub mod operator;

pub use geometry::MeshGeometry;

use nalgebra::Vector3;
use std::collections::BTreeMap;
use thiserror::Error;

/// Smallest interior angle accepted in a face, in radians.
pub const MIN_ANGLE: f64 = 1e-3;
/// Gauss-Bonnet consistency: total angle defect must match 2 pi chi this well.
pub const GAUSS_BONNET_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh needs at least 4 vertices and 4 faces, got {vertices} / {faces}")]
    TooSmall { vertices: usize, faces: usize },
    #[error("face {face} references vertex {index}, but there are only {vertices} vertices")]
    IndexOutOfRange { face: usize, index: usize, vertices: usize },
    #[error("face {face} repeats a vertex")]
    RepeatedVertex { face: usize },
    #[error("vertex {vertex} has a non-finite coordinate")]
    NonFiniteVertex { vertex: usize },
    #[error("face {face} is degenerate: smallest angle {angle:.3e} rad < {MIN_ANGLE:.1e}")]
    DegenerateFace { face: usize, angle: f64 },
    #[error("edge ({a}, {b}) belongs to {count} faces; surface is not closed or not manifold")]
    NonManifoldEdge { a: usize, b: usize, count: usize },
    #[error("boundary edges found (surface not closed), first few: {edges:?}")]
    OpenBoundary { edges: Vec<(usize, usize)> },
    #[error("faces {f0} and {f1} traverse edge ({a}, {b}) in the same direction; orientation is inconsistent")]
    InconsistentOrientation { a: usize, b: usize, f0: usize, f1: usize },
    #[error("vertex {vertex} is isolated")]
    IsolatedVertex { vertex: usize },
    #[error("mesh graph is disconnected")]
    Disconnected,
    #[error("{0}")]
    Parse(#[from] io::MeshParseError),
    #[error("shape operator fit failed at vertex {vertex}: {reason}")]
    ShapeFit { vertex: usize, reason: String },
}

#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Vector3<f64>>,
    faces: Vec<[usize; 3]>,
    /// 1-ring vertex adjacency, each list sorted ascending.
    neighbors: Vec<Vec<usize>>,
    /// Faces incident to each vertex, sorted ascending.
    vertex_faces: Vec<Vec<usize>>,
    euler_characteristic: i64,
    edge_count: usize,
    /// More than half the triangles have an obtuse angle; cotangent weights
    /// then carry negative entries. Kept as a warning, not an error.
    pub obtuse_dominated: bool,
}

impl TriMesh {
    pub fn new(vertices: Vec<Vector3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if vertices.len() < 4 || faces.len() < 4 {
            return Err(MeshError::TooSmall { vertices: vertices.len(), faces: faces.len() });
        }
        for (i, v) in vertices.iter().enumerate() {
            if !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite()) {
                return Err(MeshError::NonFiniteVertex { vertex: i });
            }
        }
        let mut obtuse = 0usize;
        for (fi, f) in faces.iter().enumerate() {
            for &ix in f {
                if ix >= vertices.len() {
                    return Err(MeshError::IndexOutOfRange { face: fi, index: ix, vertices: vertices.len() });
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(MeshError::RepeatedVertex { face: fi });
            }
            let angles = face_angles(&vertices, f);
            let min = angles[0].min(angles[1]).min(angles[2]);
            if !(min > MIN_ANGLE) {
                return Err(MeshError::DegenerateFace { face: fi, angle: min });
            }
            if angles.iter().any(|&a| a > std::f64::consts::FRAC_PI_2) {
                obtuse += 1;
            }
        }

        // Closedness and orientation via the directed edge map.
        let mut directed: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (fi, f) in faces.iter().enumerate() {
            for k in 0..3 {
                let a = f[k];
                let b = f[(k + 1) % 3];
                if let Some(&other) = directed.get(&(a, b)) {
                    return Err(MeshError::InconsistentOrientation { a, b, f0: other, f1: fi });
                }
                directed.insert((a, b), fi);
            }
        }
        let mut boundary = Vec::new();
        let mut edge_count = 0usize;
        for (&(a, b), _) in directed.iter() {
            if a < b {
                edge_count += 1;
                if !directed.contains_key(&(b, a)) {
                    if boundary.len() < 8 {
                        boundary.push((a, b));
                    }
                }
            } else if !directed.contains_key(&(b, a)) {
                edge_count += 1;
                if boundary.len() < 8 {
                    boundary.push((b, a));
                }
            }
        }
        if !boundary.is_empty() {
            return Err(MeshError::OpenBoundary { edges: boundary });
        }

        let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); vertices.len()];
        let mut vertex_faces: Vec<Vec<usize>> = vec![Vec::new(); vertices.len()];
        for (&(a, b), _) in directed.iter() {
            neighbors[a].push(b);
        }
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                vertex_faces[v].push(fi);
            }
        }
        for list in neighbors.iter_mut() {
            list.sort_unstable();
            list.dedup();
        }
        for (v, list) in neighbors.iter().enumerate() {
            if list.is_empty() {
                return Err(MeshError::IsolatedVertex { vertex: v });
            }
        }

        let euler = vertices.len() as i64 - edge_count as i64 + faces.len() as i64;
        Ok(Self {
            obtuse_dominated: obtuse * 2 > faces.len(),
            vertices,
            faces,
            neighbors,
            vertex_faces,
            euler_characteristic: euler,
            edge_count,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.euler_characteristic
    }

    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        &self.vertex_faces[v]
    }

    /// Vertices within `rings` edge hops of v, excluding v itself, ascending.
    pub fn ring_neighborhood(&self, v: usize, rings: usize) -> Vec<usize> {
        let mut seen = vec![v];
        let mut frontier = vec![v];
        for _ in 0..rings {
            let mut next = Vec::new();
            for &u in &frontier {
                for &w in self.neighbors(u) {
                    if !seen.contains(&w) && !next.contains(&w) {
                        next.push(w);
                    }
                }
            }
            seen.extend_from_slice(&next);
            frontier = next;
        }
        seen.retain(|&u| u != v);
        seen.sort_unstable();
        seen
    }
}

/// Interior angles of a triangle, one per vertex in face order.
pub(crate) fn face_angles(vertices: &[Vector3<f64>], f: &[usize; 3]) -> [f64; 3] {
    let p = [vertices[f[0]], vertices[f[1]], vertices[f[2]]];
    let mut out = [0.0; 3];
    for k in 0..3 {
        let a = p[(k + 1) % 3] - p[k];
        let b = p[(k + 2) % 3] - p[k];
        let denom = a.norm() * b.norm();
        if denom == 0.0 {
            out[k] = 0.0;
        } else {
            out[k] = (a.dot(&b) / denom).clamp(-1.0, 1.0).acos();
        }
    }
    out
}
