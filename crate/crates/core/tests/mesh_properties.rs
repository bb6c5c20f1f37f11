use nalgebra::{Point3, Vector3, Vector4};
use polyloop_core::fixtures;
use polyloop_core::mesh::{decimate, vertex_quadric, ParamSlot, ReductionParams, TriangleMesh};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Closest point on triangle `abc` to `p` (Ericson, Real-Time Collision Detection 5.1.5).
fn closest_on_triangle(p: Point3<f64>, a: Point3<f64>, b: Point3<f64>, c: Point3<f64>) -> Point3<f64> {
    let (ab, ac, ap) = (b - a, c - a, p - a);
    let (d1, d2) = (ab.dot(&ap), ac.dot(&ap));
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let (d3, d4) = (ab.dot(&bp), ac.dot(&bp));
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let (d5, d6) = (ab.dot(&cp), ac.dot(&cp));
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && d4 - d3 >= 0.0 && d5 - d6 >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

/// Barycentric grid samples on every face.
fn samples(m: &TriangleMesh, k: usize) -> Vec<Point3<f64>> {
    let mut out = Vec::new();
    for f in 0..m.face_count() {
        let [a, b, c] = m.triangle(f);
        for i in 0..=k {
            for j in 0..=k - i {
                let (u, v) = (i as f64 / k as f64, j as f64 / k as f64);
                out.push(a + (b - a) * u + (c - a) * v);
            }
        }
    }
    out
}

fn one_sided(from: &[Point3<f64>], to: &TriangleMesh) -> f64 {
    let tris: Vec<_> = (0..to.face_count()).map(|f| to.triangle(f)).collect();
    from.iter()
        .map(|&p| {
            tris.iter()
                .map(|&[a, b, c]| (p - closest_on_triangle(p, a, b, c)).norm_squared())
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .fold(0.0, f64::max)
}

fn hausdorff(a: &TriangleMesh, b: &TriangleMesh) -> f64 {
    one_sided(&samples(a, 4), b).max(one_sided(&samples(b, 4), a))
}

#[test]
fn closest_point_oracle_sanity() {
    let (a, b, c) = (Point3::origin(), Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0));
    let inside = closest_on_triangle(Point3::new(0.2, 0.2, 3.0), a, b, c);
    assert!((inside - Point3::new(0.2, 0.2, 0.0)).norm() < 1e-15);
    assert_eq!(closest_on_triangle(Point3::new(-1.0, -1.0, 0.0), a, b, c), a);
    let e = closest_on_triangle(Point3::new(1.0, 1.0, 0.0), a, b, c);
    assert!((e - Point3::new(0.5, 0.5, 0.0)).norm() < 1e-15);
}

#[test]
fn half_reduction_stays_within_five_percent_of_the_diagonal() {
    for (name, mesh) in fixtures::bundled() {
        assert!(mesh.face_count() <= 500, "{name}");
        let out = decimate(&mesh, &ReductionParams::default()).unwrap();
        assert!(
            (out.reduction_ratio - 0.5).abs() < 0.01,
            "{name}: {}",
            out.reduction_ratio
        );
        let d = hausdorff(&mesh, &out.mesh) / mesh.bbox_diagonal();
        assert!(d <= 0.05, "{name}: Hausdorff {d:.4} of the diagonal");
    }
}

#[test]
fn vertex_quadrics_are_positive_semidefinite() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let meshes: Vec<TriangleMesh> = fixtures::bundled().into_iter().map(|(_, m)| m).collect();
    let mut worst = f64::INFINITY;
    for _ in 0..1000 {
        let m = &meshes[rng.random_range(0..meshes.len())];
        let v = rng.random_range(0..m.vertex_count());
        let q = vertex_quadric(m, v, rng.random()).unwrap();
        assert!((q - q.transpose()).norm() < 1e-12);
        for _ in 0..4 {
            let p = Vector4::new(
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                1.0,
            );
            worst = worst.min(p.dot(&(q * p)));
        }
    }
    assert!(worst >= -1e-9, "min quadric value {worst}");
}

#[test]
fn planar_vertex_quadric_vanishes_in_the_plane() {
    let flat = fixtures::grid(6, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for v in 0..flat.vertex_count() {
        let q = vertex_quadric(&flat, v, 0.5).unwrap();
        for _ in 0..20 {
            let p = Vector4::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0), 0.0, 1.0);
            assert!(p.dot(&(q * p)).abs() <= 1e-12);
        }
    }
}

#[test]
fn larger_targets_never_give_more_faces() {
    for (name, mesh) in fixtures::bundled() {
        let mut last = mesh.face_count();
        for step in 0..=10 {
            let t = step as f64 / 10.0;
            let params = ReductionParams::default().with(ParamSlot::TargetRatio, t);
            let faces = decimate(&mesh, &params).unwrap().mesh.face_count();
            assert!(faces <= last, "{name} at {t}: {faces} > {last}");
            last = faces;
        }
    }
}

#[test]
fn decimation_is_bitwise_deterministic() {
    let mesh = fixtures::by_name("bumpy1280").unwrap();
    let params = ReductionParams::clamped([0.8, 0.3, 0.6, 0.9, 0.2, 0.7, 0.4, 0.1, 0.5]);
    let a = decimate(&mesh, &params).unwrap().mesh;
    let b = decimate(&mesh, &params).unwrap().mesh;
    assert_eq!(a.faces(), b.faces());
    let bits = |m: &TriangleMesh| {
        m.vertices()
            .iter()
            .flat_map(|p| p.coords.iter().map(|c| c.to_bits()).collect::<Vec<_>>())
            .collect::<Vec<_>>()
    };
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn icosphere_75_percent_target() {
    let mesh = fixtures::by_name("icosphere1280").unwrap();
    assert_eq!(mesh.face_count(), 1280);
    let params = ReductionParams::default().with(ParamSlot::TargetRatio, 0.75);
    let out = decimate(&mesh, &params).unwrap();
    assert!(out.mesh.face_count().abs_diff(320) <= 2);
    assert!((out.reduction_ratio - 0.75).abs() <= 0.002);
}

fn check_invariants(m: &TriangleMesh) {
    assert!(m.face_count() >= 1);
    for f in m.faces() {
        assert!(f.iter().all(|&v| (v as usize) < m.vertex_count()));
        assert!(f[0] != f[1] && f[1] != f[2] && f[0] != f[2]);
    }
    let mut used = vec![false; m.vertex_count()];
    m.faces().iter().flatten().for_each(|&v| used[v as usize] = true);
    assert!(used.iter().all(|&u| u), "unreferenced vertex in output");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn any_parameters_give_a_valid_mesh(values in prop::array::uniform9(0.0f64..=1.0), which in 0usize..5) {
        let (_, mesh) = &fixtures::bundled()[which];
        let out = decimate(mesh, &ReductionParams::new(values).unwrap()).unwrap();
        check_invariants(&out.mesh);
        prop_assert!((0.0..=1.0).contains(&out.reduction_ratio));
        let expected = (mesh.face_count() - out.mesh.face_count()) as f64 / mesh.face_count() as f64;
        prop_assert_eq!(out.reduction_ratio, expected);
    }

    #[test]
    fn scaled_copies_decimate_to_scaled_results(scale in 0.01f64..100.0, dx in -5.0f64..5.0) {
        let mesh = fixtures::by_name("torus").unwrap();
        let moved = mesh.transformed(scale, Vector3::new(dx, -dx, 0.5));
        let a = decimate(&mesh, &ReductionParams::default()).unwrap();
        let b = decimate(&moved, &ReductionParams::default()).unwrap();
        prop_assert_eq!(a.mesh.face_count(), b.mesh.face_count());
    }
}
