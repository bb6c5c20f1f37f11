use nalgebra::{Point3, Vector3};
use polyloop_core::fixtures;
use polyloop_core::mesh::{decimate, ParamSlot, ReductionParams, TriangleMesh};
use polyloop_core::render::{
    perceived_quality, render, render_detailed, ssim, Frame, QualityReference, RenderImage, View, FILL,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Icosphere bent along x only, so it is mirror-symmetric in z but not in x.
fn z_symmetric_mesh() -> TriangleMesh {
    let s = fixtures::icosphere(3);
    let verts = s
        .vertices()
        .iter()
        .map(|p| Point3::new(p.x + 0.3 * p.x * p.x + 0.2 * p.y, p.y, p.z))
        .collect();
    TriangleMesh::new(verts, s.faces().to_vec()).unwrap()
}

#[test]
fn front_and_back_of_a_mirror_symmetric_mesh_are_flips() {
    let m = z_symmetric_mesh();
    // Precondition: the vertex set is closed under z -> -z.
    for p in m.vertices() {
        assert!(m
            .vertices()
            .iter()
            .any(|q| (q - Point3::new(p.x, p.y, -p.z)).norm() < 1e-12));
    }
    let front = render(&m, View::Front, 128).unwrap();
    let back = render(&m, View::Back, 128).unwrap().flipped_horizontally();
    let diffs: Vec<f64> = front
        .luminance()
        .iter()
        .zip(back.luminance())
        .map(|(a, b)| (a - b).abs())
        .collect();
    let large = diffs.iter().filter(|&&d| d > 1e-6).count();
    // Pixel centres lying exactly on a shared edge may resolve to either face.
    assert!(large * 200 <= diffs.len(), "{large} of {} pixels differ", diffs.len());
    assert!(ssim(&front, &back).unwrap() > 0.999);
    // The left and right views of the same mesh are not flips of each other.
    let left = render(&m, View::Left, 128).unwrap();
    let right = render(&m, View::Right, 128).unwrap().flipped_horizontally();
    assert!(ssim(&left, &right).unwrap() < 0.99);
}

fn box_mesh(half: f64, offset: u32) -> (Vec<Point3<f64>>, Vec<[u32; 3]>) {
    let b = fixtures::subdivided_box(2);
    let verts = b.vertices().iter().map(|p| Point3::from(p.coords * half)).collect();
    let faces = b.faces().iter().map(|f| f.map(|v| v + offset)).collect();
    (verts, faces)
}

/// Nearest face along the viewing ray through the pixel centre, found by
/// testing every triangle (Moller-Trumbore).
fn ray_cast(mesh: &TriangleMesh, view: View, size: usize, px: usize, py: usize) -> Option<(u32, f64)> {
    let frame = Frame::fit(mesh);
    let scale = size as f64 * FILL / frame.diagonal;
    let half = size as f64 / 2.0;
    let (sx, sy) = (px as f64 + 0.5, py as f64 + 0.5);
    let toward = view.toward_camera();
    let origin = frame.center + view.right() * ((sx - half) / scale) - view.up() * ((sy - half) / scale)
        + toward * 10.0 * frame.diagonal;
    let dir: Vector3<f64> = -toward;
    let mut best: Option<(u32, f64)> = None;
    for f in 0..mesh.face_count() {
        let [a, b, c] = mesh.triangle(f);
        let (e1, e2) = (b - a, c - a);
        let h = dir.cross(&e2);
        let det = e1.dot(&h);
        if det.abs() < 1e-14 {
            continue;
        }
        let s = origin - a;
        let u = s.dot(&h) / det;
        let q = s.cross(&e1);
        let v = dir.dot(&q) / det;
        if !(0.0..=1.0).contains(&u) || v < 0.0 || u + v > 1.0 {
            continue;
        }
        let t = e2.dot(&q) / det;
        if best.is_none_or(|(_, bt)| t < bt) {
            best = Some((f as u32, t));
        }
    }
    best
}

#[test]
fn enclosed_geometry_never_reaches_the_image() {
    let (mut verts, mut faces) = box_mesh(1.0, 0);
    let outer_faces = faces.len() as u32;
    let (iv, if_) = box_mesh(0.4, verts.len() as u32);
    verts.extend(iv);
    faces.extend(if_);
    let nested = TriangleMesh::new(verts, faces).unwrap();
    let size = 16;
    for view in View::ALL {
        let out = render_detailed(&nested, view, size, None).unwrap();
        let mut agree = 0;
        for py in 0..size {
            for px in 0..size {
                let drawn = out.face_ids[py * size + px];
                let oracle = ray_cast(&nested, view, size, px, py);
                assert!(
                    drawn.is_none_or(|f| f < outer_faces),
                    "{view:?} ({px},{py}) shows inner face"
                );
                assert!(oracle.is_none_or(|(f, _)| f < outer_faces));
                agree += (drawn.is_some() == oracle.is_some()) as usize;
            }
        }
        assert!(agree >= size * size - 2, "{view:?}: coverage agrees on {agree} pixels");
    }
}

#[test]
fn ray_cast_oracle_matches_depth_order_of_an_open_pair() {
    // Two parallel squares facing the front camera; the nearer one hides the other.
    let mut verts = Vec::new();
    let mut faces = Vec::new();
    for (k, z) in [(0u32, -0.5), (1, 0.5)] {
        let o = 4 * k;
        let s = if k == 0 { 1.0 } else { 0.5 };
        verts.extend([[-s, -s], [s, -s], [s, s], [-s, s]].map(|[x, y]| Point3::new(x, y, z)));
        faces.extend([[o, o + 1, o + 2], [o, o + 2, o + 3]]);
    }
    let m = TriangleMesh::new(verts, faces).unwrap();
    let out = render_detailed(&m, View::Front, 16, None).unwrap();
    for py in 0..16 {
        for px in 0..16 {
            let oracle = ray_cast(&m, View::Front, 16, px, py).map(|(f, _)| f / 2);
            assert_eq!(out.face_ids[py * 16 + px].map(|f| f / 2), oracle, "({px},{py})");
        }
    }
}

#[test]
fn ssim_bounds_and_symmetry_on_random_images() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let a = RenderImage::new(32, 32, (0..1024).map(|_| rng.random()).collect());
        let b = RenderImage::new(32, 32, (0..1024).map(|_| rng.random()).collect());
        let (ab, ba) = (ssim(&a, &b).unwrap(), ssim(&b, &a).unwrap());
        assert!((-1.0..=1.0).contains(&ab));
        assert!((ab - ba).abs() <= 1e-12);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() <= 1e-9);
        assert!(ab < 1.0);
    }
}

fn decimated(mesh: &TriangleMesh, fraction: f64) -> TriangleMesh {
    let params = ReductionParams::default().with(ParamSlot::TargetRatio, ReductionParams::target_ratio_for(fraction));
    decimate(mesh, &params).unwrap().mesh
}

#[test]
fn quality_degrades_monotonically_with_reduction() {
    for name in ["icosphere", "torus", "bumpy"] {
        let mesh = fixtures::by_name(name).unwrap();
        let reference = QualityReference::new(&mesh).unwrap();
        let scores: Vec<f64> = [0.0, 0.25, 0.5, 0.9]
            .iter()
            .map(|&f| reference.score(&decimated(&mesh, f)).unwrap().mean)
            .collect();
        assert!((scores[0] - 1.0).abs() <= 1e-9, "{name}: {scores:?}");
        assert!(scores.windows(2).all(|w| w[1] < w[0]), "{name}: {scores:?}");
    }
}

/// Least squares through the 3x3 normal equations.
fn quadratic_coefficients(x: &[f64], y: &[f64]) -> [f64; 3] {
    let mut a = nalgebra::Matrix3::zeros();
    let mut b = nalgebra::Vector3::zeros();
    for (&xi, &yi) in x.iter().zip(y) {
        let row = nalgebra::Vector3::new(1.0, xi, xi * xi);
        a += row * row.transpose();
        b += row * yi;
    }
    let c = a.lu().solve(&b).unwrap();
    [c[0], c[1], c[2]]
}

#[test]
fn quality_against_ratio_is_concave() {
    let mesh = fixtures::by_name("bumpy").unwrap();
    let reference = QualityReference::with_size(&mesh, 128).unwrap();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for step in 0..=19 {
        let out = decimate(
            &mesh,
            &ReductionParams::default().with(ParamSlot::TargetRatio, step as f64 * 0.05),
        )
        .unwrap();
        x.push(out.reduction_ratio);
        y.push(reference.score(&out.mesh).unwrap().mean);
    }
    let [_, _, c2] = quadratic_coefficients(&x, &y);
    assert!(c2 < 0.0, "quadratic coefficient {c2}");
}

#[test]
fn similarity_transforms_leave_quality_unchanged() {
    let mesh = fixtures::by_name("torus").unwrap();
    let variant = decimated(&mesh, 0.6);
    let q = perceived_quality(&mesh, &variant).unwrap();
    let (s, t) = (3.7, Vector3::new(-2.0, 5.0, 1.0));
    let q2 = perceived_quality(&mesh.transformed(s, t), &variant.transformed(s, t)).unwrap();
    assert!((q.mean - q2.mean).abs() < 1e-6, "{} vs {}", q.mean, q2.mean);
    let mut views = q.per_view;
    views.reverse();
    let reversed = views.iter().sum::<f64>() / 5.0;
    assert!((reversed - q.mean).abs() < 1e-15);
}
