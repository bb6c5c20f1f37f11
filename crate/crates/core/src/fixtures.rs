//! Procedurally generated test meshes.
//!
//! The five bundled fixtures stand in for the small organic and hard-surface
//! models a polygon-reduction loop is exercised on; all have at most 500 faces.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::Point3;

use crate::mesh::TriangleMesh;

/// Names accepted by [`by_name`], in bundle order.
pub const BUNDLED: [&str; 5] = ["icosphere", "torus", "cylinder", "box", "bumpy"];

/// The bundled fixtures as `(name, mesh)` pairs.
pub fn bundled() -> Vec<(&'static str, TriangleMesh)> {
    BUNDLED.iter().map(|&n| (n, by_name(n).unwrap())).collect()
}

pub fn by_name(name: &str) -> Option<TriangleMesh> {
    Some(match name {
        "icosphere" => icosphere(2),
        "icosphere1280" => icosphere(3),
        "torus" => torus(20, 10),
        "cylinder" => cylinder(16, 6),
        "box" => subdivided_box(4),
        "bumpy" => bumpy_sphere(2),
        "bumpy1280" => bumpy_sphere(3),
        "torus1600" => torus(40, 20),
        "tetrahedron" => tetrahedron(),
        _ => return None,
    })
}

fn mesh(vertices: Vec<Point3<f64>>, faces: Vec<[u32; 3]>) -> TriangleMesh {
    TriangleMesh::new(vertices, faces).expect("fixture geometry is valid")
}

pub fn tetrahedron() -> TriangleMesh {
    mesh(
        vec![
            Point3::new(1.0, 1.0, 1.0),
            Point3::new(1.0, -1.0, -1.0),
            Point3::new(-1.0, 1.0, -1.0),
            Point3::new(-1.0, -1.0, 1.0),
        ],
        vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]],
    )
}

/// Unit icosphere with `20 * 4^subdivisions` outward-facing triangles.
pub fn icosphere(subdivisions: u32) -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Point3<f64>> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Point3::from(nalgebra::Vector3::new(x, y, z).normalize()))
    .collect();
    let mut faces: Vec<[u32; 3]> = vec![
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
    for _ in 0..subdivisions {
        let mut cache: HashMap<(u32, u32), u32> = HashMap::new();
        let mut midpoint = |a: u32, b: u32, verts: &mut Vec<Point3<f64>>| -> u32 {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                let m = nalgebra::center(&verts[a as usize], &verts[b as usize]);
                verts.push(Point3::from(m.coords.normalize()));
                (verts.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    mesh(verts, faces)
}

/// Icosphere with a smooth radial bump pattern, giving varied curvature.
pub fn bumpy_sphere(subdivisions: u32) -> TriangleMesh {
    let base = icosphere(subdivisions);
    let verts = base
        .vertices()
        .iter()
        .map(|p| {
            let r = 1.0 + 0.15 * (3.0 * p.x).sin() * (2.0 * p.y).cos() + 0.1 * (4.0 * p.z).sin();
            Point3::from(p.coords * r)
        })
        .collect();
    mesh(verts, base.faces().to_vec())
}

/// Flat `nx` by `ny` grid of unit squares in the z = 0 plane, vertex
/// `(i, j)` at index `i + j * (nx + 1)`.
pub fn grid(nx: u32, ny: u32) -> TriangleMesh {
    let mut verts = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            verts.push(Point3::new(i as f64, j as f64, 0.0));
        }
    }
    let w = nx + 1;
    let mut faces = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let v = i + j * w;
            faces.push([v, v + 1, v + w + 1]);
            faces.push([v, v + w + 1, v + w]);
        }
    }
    mesh(verts, faces)
}

/// Torus around the y axis with radii 1 and 0.35.
pub fn torus(major: u32, minor: u32) -> TriangleMesh {
    let (big, small) = (1.0, 0.35);
    let mut verts = Vec::new();
    for i in 0..major {
        let u = 2.0 * PI * i as f64 / major as f64;
        for j in 0..minor {
            let v = 2.0 * PI * j as f64 / minor as f64;
            let r = big + small * v.cos();
            verts.push(Point3::new(r * u.cos(), small * v.sin(), r * u.sin()));
        }
    }
    let idx = |i: u32, j: u32| (i % major) * minor + (j % minor);
    let mut faces = Vec::new();
    for i in 0..major {
        for j in 0..minor {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            faces.push([a, c, b]);
            faces.push([a, d, c]);
        }
    }
    mesh(verts, faces)
}

/// Closed cylinder of radius 0.5 and height 2 along y with fan caps.
pub fn cylinder(segments: u32, rings: u32) -> TriangleMesh {
    let mut verts = Vec::new();
    for r in 0..=rings {
        let y = -1.0 + 2.0 * r as f64 / rings as f64;
        for s in 0..segments {
            let a = 2.0 * PI * s as f64 / segments as f64;
            verts.push(Point3::new(0.5 * a.cos(), y, 0.5 * a.sin()));
        }
    }
    let idx = |r: u32, s: u32| r * segments + (s % segments);
    let mut faces = Vec::new();
    for r in 0..rings {
        for s in 0..segments {
            let (a, b, c, d) = (idx(r, s), idx(r, s + 1), idx(r + 1, s + 1), idx(r + 1, s));
            faces.push([a, c, b]);
            faces.push([a, d, c]);
        }
    }
    let bottom = verts.len() as u32;
    verts.push(Point3::new(0.0, -1.0, 0.0));
    let top = verts.len() as u32;
    verts.push(Point3::new(0.0, 1.0, 0.0));
    for s in 0..segments {
        faces.push([bottom, idx(0, s), idx(0, s + 1)]);
        faces.push([top, idx(rings, s + 1), idx(rings, s)]);
    }
    mesh(verts, faces)
}

/// Axis-aligned box [-1,1]^3 with each side split into `n` by `n` quads.
pub fn subdivided_box(n: u32) -> TriangleMesh {
    let mut verts: Vec<Point3<f64>> = Vec::new();
    let mut index: HashMap<(i64, i64, i64), u32> = HashMap::new();
    let mut vid = |p: [i64; 3], verts: &mut Vec<Point3<f64>>| -> u32 {
        *index.entry((p[0], p[1], p[2])).or_insert_with(|| {
            let s = n as f64;
            verts.push(Point3::new(
                2.0 * p[0] as f64 / s - 1.0,
                2.0 * p[1] as f64 / s - 1.0,
                2.0 * p[2] as f64 / s - 1.0,
            ));
            (verts.len() - 1) as u32
        })
    };
    let n_i = n as i64;
    let mut faces = Vec::new();
    // (normal axis, side, u axis, v axis) with u x v pointing outward
    let sides = [
        (0, n_i, 1, 2),
        (0, 0, 2, 1),
        (1, n_i, 2, 0),
        (1, 0, 0, 2),
        (2, n_i, 0, 1),
        (2, 0, 1, 0),
    ];
    for &(axis, level, ua, va) in &sides {
        for i in 0..n_i {
            for j in 0..n_i {
                let corner = |di: i64, dj: i64| {
                    let mut p = [0i64; 3];
                    p[axis] = level;
                    p[ua] = i + di;
                    p[va] = j + dj;
                    p
                };
                let a = vid(corner(0, 0), &mut verts);
                let b = vid(corner(1, 0), &mut verts);
                let c = vid(corner(1, 1), &mut verts);
                let d = vid(corner(0, 1), &mut verts);
                faces.push([a, b, c]);
                faces.push([a, c, d]);
            }
        }
    }
    mesh(verts, faces)
}
