//! Indexed triangle meshes: validation, OBJ I/O, quadrics and decimation.

mod decimate;
mod obj;
mod params;
mod quadric;

pub use decimate::{decimate, ReductionResult};
pub use obj::{load_obj, write_obj};
pub use params::{ParamSlot, ReductionParams, PARAM_COUNT};
pub use quadric::{vertex_quadric, Quadric};

use nalgebra::{Point3, Vector3};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("face {face}: {reason}")]
    InvalidFace { face: usize, reason: String },
    #[error("mesh has no faces")]
    Empty,
    #[error("mesh has {faces} faces, at least 4 are required for decimation")]
    TooFewFaces { faces: usize },
    #[error("vertex {vertex} has a non-finite coordinate")]
    NonFinite { vertex: usize },
    #[error("vertex {vertex} has no incident faces")]
    IsolatedVertex { vertex: usize },
    #[error("mesh bounding box is degenerate")]
    DegenerateBounds,
    #[error("i/o error: {0}")]
    Io(String),
}

/// An indexed triangle mesh.
///
/// Every face references existing vertices and no face repeats a vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Point3<f64>>,
    faces: Vec<[u32; 3]>,
    face_flags: Option<Vec<bool>>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[u32; 3]>) -> Result<Self, MeshError> {
        if faces.is_empty() {
            return Err(MeshError::Empty);
        }
        let n = vertices.len();
        for (i, f) in faces.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&v| v as usize >= n) {
                return Err(MeshError::InvalidFace {
                    face: i,
                    reason: format!("vertex index {bad} out of range ({n} vertices)"),
                });
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(MeshError::InvalidFace {
                    face: i,
                    reason: "face repeats a vertex".into(),
                });
            }
        }
        Ok(Self {
            vertices,
            faces,
            face_flags: None,
        })
    }

    /// Attaches a per-face flag (true = valid face). Length must match the face count.
    pub fn with_face_flags(mut self, flags: Vec<bool>) -> Self {
        assert_eq!(flags.len(), self.faces.len(), "one flag per face");
        self.face_flags = Some(flags);
        self
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn face_flags(&self) -> Option<&[bool]> {
        self.face_flags.as_deref()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn triangle(&self, face: usize) -> [Point3<f64>; 3] {
        let f = self.faces[face];
        [
            self.vertices[f[0] as usize],
            self.vertices[f[1] as usize],
            self.vertices[f[2] as usize],
        ]
    }

    /// Unnormalized face normal (length = twice the face area).
    pub fn face_normal_raw(&self, face: usize) -> Vector3<f64> {
        let [a, b, c] = self.triangle(face);
        (b - a).cross(&(c - a))
    }

    pub fn face_area(&self, face: usize) -> f64 {
        0.5 * self.face_normal_raw(face).norm()
    }

    /// Axis-aligned bounding box as (min, max).
    pub fn bounds(&self) -> (Point3<f64>, Point3<f64>) {
        let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    pub fn bbox_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounds();
        (hi - lo).norm()
    }

    pub fn check_finite(&self) -> Result<(), MeshError> {
        match self
            .vertices
            .iter()
            .position(|p| !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()))
        {
            Some(vertex) => Err(MeshError::NonFinite { vertex }),
            None => Ok(()),
        }
    }

    /// Applies `p -> scale * p + offset` to every vertex.
    pub fn transformed(&self, scale: f64, offset: Vector3<f64>) -> Self {
        let mut out = self.clone();
        for p in &mut out.vertices {
            *p = Point3::from(p.coords * scale + offset);
        }
        out
    }

    /// Incident face lists per vertex, each sorted ascending.
    pub fn vertex_faces(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (fi, f) in self.faces.iter().enumerate() {
            for &v in f {
                adj[v as usize].push(fi as u32);
            }
        }
        adj
    }
}
