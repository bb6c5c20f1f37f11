use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::{RenderError, RenderImage};
use crate::mesh::TriangleMesh;

/// Fraction of the image spanned by the bounding-box diagonal.
pub const FILL: f64 = 0.95;
/// Luminance floor for lit surfaces; the background is 0.
pub const AMBIENT: f64 = 0.15;

/// Axis-aligned orthographic camera directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum View {
    Front,
    Back,
    Left,
    Right,
    Top,
}

impl View {
    pub const ALL: [View; 5] = [View::Front, View::Back, View::Left, View::Right, View::Top];

    /// Unit vector from the scene towards the camera.
    pub fn toward_camera(self) -> Vector3<f64> {
        match self {
            View::Front => Vector3::z(),
            View::Back => -Vector3::z(),
            View::Left => -Vector3::x(),
            View::Right => Vector3::x(),
            View::Top => Vector3::y(),
        }
    }

    pub fn up(self) -> Vector3<f64> {
        match self {
            View::Top => -Vector3::z(),
            _ => Vector3::y(),
        }
    }

    pub fn right(self) -> Vector3<f64> {
        self.up().cross(&self.toward_camera())
    }
}

/// Placement of the model in the image: bounding-box center and diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub center: Point3<f64>,
    pub diagonal: f64,
}

impl Frame {
    pub fn fit(mesh: &TriangleMesh) -> Self {
        let (lo, hi) = mesh.bounds();
        Self {
            center: nalgebra::center(&lo, &hi),
            diagonal: (hi - lo).norm(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RenderOutput {
    pub image: RenderImage,
    /// Index of the face visible at each pixel, row-major.
    pub face_ids: Vec<Option<u32>>,
}

/// Renders `mesh` fitted to its own bounding box.
pub fn render(mesh: &TriangleMesh, view: View, size: usize) -> Result<RenderImage, RenderError> {
    Ok(render_detailed(mesh, view, size, None)?.image)
}

/// Renders `mesh` with an explicit frame (defaults to the mesh's own), also
/// returning the per-pixel visible face.
pub fn render_detailed(
    mesh: &TriangleMesh,
    view: View,
    size: usize,
    frame: Option<&Frame>,
) -> Result<RenderOutput, RenderError> {
    if mesh.face_count() == 0 || mesh.vertex_count() == 0 {
        return Err(RenderError::EmptyMesh);
    }
    if size < 16 {
        return Err(RenderError::TooSmall(size));
    }
    mesh.check_finite()?;
    let frame = frame.copied().unwrap_or_else(|| Frame::fit(mesh));
    let scale = if frame.diagonal > 0.0 {
        size as f64 * FILL / frame.diagonal
    } else {
        1.0
    };
    let (right, up, toward) = (view.right(), view.up(), view.toward_camera());
    let half = size as f64 / 2.0;

    let projected: Vec<(f64, f64, f64)> = mesh
        .vertices()
        .iter()
        .map(|p| {
            let d = p - frame.center;
            (half + d.dot(&right) * scale, half - d.dot(&up) * scale, d.dot(&toward))
        })
        .collect();

    let normals = vertex_normals(mesh);
    let mut depth = vec![f64::NEG_INFINITY; size * size];
    let mut lum = vec![0.0; size * size];
    let mut ids = vec![None; size * size];

    for (fi, f) in mesh.faces().iter().enumerate() {
        let [a, b, c] = f.map(|v| projected[v as usize]);
        let area = edge(a, b, (c.0, c.1));
        if area.abs() < 1e-12 {
            continue;
        }
        let [na, nb, nc] = f.map(|v| normals[v as usize]);

        let x0 = (a.0.min(b.0).min(c.0) - 0.5).floor().max(0.0) as usize;
        let x1 = (a.0.max(b.0).max(c.0) - 0.5).ceil().min(size as f64 - 1.0);
        let y0 = (a.1.min(b.1).min(c.1) - 0.5).floor().max(0.0) as usize;
        let y1 = (a.1.max(b.1).max(c.1) - 0.5).ceil().min(size as f64 - 1.0);
        if x1 < 0.0 || y1 < 0.0 {
            continue;
        }
        let (x1, y1) = (x1 as usize, y1 as usize);
        for py in y0..=y1 {
            let sy = py as f64 + 0.5;
            for px in x0..=x1 {
                let s = (px as f64 + 0.5, sy);
                let w0 = edge(b, c, s) / area;
                let w1 = edge(c, a, s) / area;
                let w2 = edge(a, b, s) / area;
                if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
                    continue;
                }
                let z = w0 * a.2 + w1 * b.2 + w2 * c.2;
                let k = py * size + px;
                if z > depth[k] {
                    let n = na * w0 + nb * w1 + nc * w2;
                    let len = n.norm();
                    let cos = if len > 0.0 {
                        (n.dot(&toward) / len).abs().min(1.0)
                    } else {
                        0.0
                    };
                    depth[k] = z;
                    lum[k] = AMBIENT + (1.0 - AMBIENT) * cos;
                    ids[k] = Some(fi as u32);
                }
            }
        }
    }

    Ok(RenderOutput {
        image: RenderImage::new(size, size, lum),
        face_ids: ids,
    })
}

/// Area-weighted vertex normals, unit length (zero for vertices without
/// non-degenerate faces).
fn vertex_normals(mesh: &TriangleMesh) -> Vec<Vector3<f64>> {
    let mut acc = vec![Vector3::zeros(); mesh.vertex_count()];
    for (fi, f) in mesh.faces().iter().enumerate() {
        let n = mesh.face_normal_raw(fi);
        for &v in f {
            acc[v as usize] += n;
        }
    }
    for n in &mut acc {
        let len = n.norm();
        if len > 0.0 {
            *n /= len;
        }
    }
    acc
}

fn edge(a: (f64, f64, f64), b: (f64, f64, f64), p: (f64, f64)) -> f64 {
    (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0)
}
