use nalgebra::{Matrix3, Matrix4, Point3, Vector3};

use super::{MeshError, TriangleMesh};

/// Symmetric 4x4 error quadric stored as its upper triangle:
///
/// ```text
/// | a b c d |
/// | b e f g |
/// | c f h i |
/// | d g i j |
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quadric([f64; 10]);

impl Quadric {
    pub fn zero() -> Self {
        Self([0.0; 10])
    }

    /// Weighted squared distance to the plane `n·x + d = 0`, `n` of unit length.
    pub fn from_plane(n: Vector3<f64>, d: f64, weight: f64) -> Self {
        let (a, b, c) = (n.x, n.y, n.z);
        Self([a * a, a * b, a * c, a * d, b * b, b * c, b * d, c * c, c * d, d * d].map(|x| x * weight))
    }

    pub fn evaluate(&self, p: &Point3<f64>) -> f64 {
        let q = &self.0;
        let (x, y, z) = (p.x, p.y, p.z);
        q[0] * x * x
            + 2.0 * q[1] * x * y
            + 2.0 * q[2] * x * z
            + 2.0 * q[3] * x
            + q[4] * y * y
            + 2.0 * q[5] * y * z
            + 2.0 * q[6] * y
            + q[7] * z * z
            + 2.0 * q[8] * z
            + q[9]
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        let q = &self.0;
        Matrix4::new(
            q[0], q[1], q[2], q[3], //
            q[1], q[4], q[5], q[6], //
            q[2], q[5], q[7], q[8], //
            q[3], q[6], q[8], q[9],
        )
    }

    /// Minimizer of the quadric, or `None` when the 3x3 block is singular or
    /// its 1-norm condition estimate exceeds `max_condition`.
    pub fn minimizer(&self, max_condition: f64) -> Option<Point3<f64>> {
        let q = &self.0;
        let a = Matrix3::new(q[0], q[1], q[2], q[1], q[4], q[5], q[2], q[5], q[7]);
        let inv = a.try_inverse()?;
        let cond = norm1(&a) * norm1(&inv);
        if !cond.is_finite() || cond > max_condition {
            return None;
        }
        let p = -(inv * Vector3::new(q[3], q[6], q[8]));
        p.iter().all(|c| c.is_finite()).then(|| Point3::from(p))
    }
}

fn norm1(m: &Matrix3<f64>) -> f64 {
    (0..3)
        .map(|c| m.column(c).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

impl std::ops::Add for Quadric {
    type Output = Quadric;

    fn add(mut self, rhs: Quadric) -> Quadric {
        self += rhs;
        self
    }
}

impl std::ops::AddAssign for Quadric {
    fn add_assign(&mut self, rhs: Quadric) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
    }
}

/// Unit normal and offset of a face plane; `None` for zero-area faces.
pub(crate) fn face_plane(mesh_tri: &[Point3<f64>; 3]) -> Option<(Vector3<f64>, f64)> {
    let [a, b, c] = mesh_tri;
    let n = (b - a).cross(&(c - a));
    let len = n.norm();
    if len <= f64::MIN_POSITIVE || !len.is_finite() {
        return None;
    }
    let n = n / len;
    Some((n, -n.dot(&a.coords)))
}

/// Blend between unit weights (0) and weights proportional to face area
/// relative to the mesh's mean face area (1).
pub(crate) fn area_weight(area: f64, mean_area: f64, area_weighting: f64) -> f64 {
    let rel = if mean_area > 0.0 { area / mean_area } else { 1.0 };
    (1.0 - area_weighting) + area_weighting * rel
}

pub(crate) fn mean_face_area(mesh: &TriangleMesh) -> f64 {
    (0..mesh.face_count()).map(|f| mesh.face_area(f)).sum::<f64>() / mesh.face_count() as f64
}

/// Sum of the fundamental error quadrics of the faces incident to `vertex`.
pub fn vertex_quadric(mesh: &TriangleMesh, vertex: usize, area_weighting: f64) -> Result<Matrix4<f64>, MeshError> {
    let mean_area = mean_face_area(mesh);
    let mut q = Quadric::zero();
    let mut incident = 0;
    for (fi, f) in mesh.faces().iter().enumerate() {
        if !f.contains(&(vertex as u32)) {
            continue;
        }
        incident += 1;
        if let Some((n, d)) = face_plane(&mesh.triangle(fi)) {
            let w = area_weight(mesh.face_area(fi), mean_area, area_weighting);
            q += Quadric::from_plane(n, d, w);
        }
    }
    if incident == 0 {
        return Err(MeshError::IsolatedVertex { vertex });
    }
    Ok(q.to_matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector4;

    fn eval(m: &Matrix4<f64>, p: [f64; 3]) -> f64 {
        let v = Vector4::new(p[0], p[1], p[2], 1.0);
        (v.transpose() * m * v)[0]
    }

    fn single_face() -> TriangleMesh {
        TriangleMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn plane_quadric_vanishes_in_plane() {
        let q = vertex_quadric(&single_face(), 0, 0.0).unwrap();
        for p in [[0.0, 0.0, 0.0], [3.0, -7.0, 0.0], [0.25, 100.0, 0.0]] {
            assert_eq!(eval(&q, p), 0.0);
        }
    }

    #[test]
    fn unit_weight_face_at_unit_height() {
        // (n·p + d)^2 with n = (0,0,1), d = 0, p = (0,0,1)
        let q = vertex_quadric(&single_face(), 0, 0.0).unwrap();
        assert!((eval(&q, [0.0, 0.0, 1.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn duplicate_coplanar_faces_double_the_quadric() {
        let one = vertex_quadric(&single_face(), 0, 0.5).unwrap();
        let two_faces = TriangleMesh::new(single_face().vertices().to_vec(), vec![[0, 1, 2], [0, 2, 1]]).unwrap();
        let two = vertex_quadric(&two_faces, 0, 0.5).unwrap();
        assert!((two - one * 2.0).abs().max() < 1e-15);
    }

    #[test]
    fn isolated_vertex_is_an_error() {
        let mut verts = single_face().vertices().to_vec();
        verts.push(Point3::new(5.0, 5.0, 5.0));
        let mesh = TriangleMesh::new(verts, vec![[0, 1, 2]]).unwrap();
        assert_eq!(
            vertex_quadric(&mesh, 3, 0.0),
            Err(MeshError::IsolatedVertex { vertex: 3 })
        );
    }

    #[test]
    fn minimizer_of_three_planes_is_their_intersection() {
        let q = Quadric::from_plane(Vector3::x(), -1.0, 1.0)
            + Quadric::from_plane(Vector3::y(), -2.0, 1.0)
            + Quadric::from_plane(Vector3::z(), 3.0, 1.0);
        let p = q.minimizer(1e12).unwrap();
        assert!((p - Point3::new(1.0, 2.0, -3.0)).norm() < 1e-12);
        assert!(q.evaluate(&p).abs() < 1e-12);
    }

    #[test]
    fn singular_quadric_has_no_minimizer() {
        let q = Quadric::from_plane(Vector3::z(), 0.0, 1.0);
        assert!(q.minimizer(1e12).is_none());
    }
}
