//! Greedy edge-collapse decimation driven by quadric error plus
//! parameter-weighted penalty terms.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use nalgebra::{Point3, Vector3};

use super::params::{ParamSlot, ReductionParams};
use super::quadric::{area_weight, face_plane, Quadric};
use super::{MeshError, TriangleMesh};

/// A result is faulty when more than this fraction of its faces flipped.
pub const FAULTY_FLIP_FRACTION: f64 = 0.01;
/// Condition limit above which the optimal placement falls back to the midpoint.
pub const MAX_PLACEMENT_CONDITION: f64 = 1e12;

// Penalty scales, in units of squared bbox diagonal (the mesh is normalized
// to unit diagonal before any cost is computed).
const CONSTRAINT_WEIGHT: f64 = 20.0;
const FLIP_COST: f64 = 1e-2;
const ASPECT_COST: f64 = 1e-2;
const LENGTH_COST: f64 = 1e-2;
const FEATURE_ANGLE_MIN_DEG: f64 = 20.0;
const FEATURE_ANGLE_SPAN_DEG: f64 = 70.0;

#[derive(Debug, Clone)]
pub struct ReductionResult {
    pub mesh: TriangleMesh,
    pub reduction_ratio: f64,
    pub faulty: bool,
    pub flipped_faces: usize,
    pub elapsed: Duration,
}

/// Decimates `mesh` until its face count reaches the target implied by
/// `params.target_ratio`, or no valid collapse remains.
pub fn decimate(mesh: &TriangleMesh, params: &ReductionParams) -> Result<ReductionResult, MeshError> {
    let start = Instant::now();
    mesh.check_finite()?;
    let original_faces = mesh.face_count();
    if original_faces < 4 {
        return Err(MeshError::TooFewFaces { faces: original_faces });
    }
    let diag = mesh.bbox_diagonal();
    if diag.is_nan() || diag <= 0.0 {
        return Err(MeshError::DegenerateBounds);
    }

    let target = ((1.0 - params.target_fraction()) * original_faces as f64).round() as usize;
    let mut state = Collapser::new(mesh, params);
    if target < original_faces {
        state.run(target);
    }
    let (out, flipped) = state.finish(mesh)?;
    let result_faces = out.face_count();
    Ok(ReductionResult {
        reduction_ratio: (original_faces - result_faces) as f64 / original_faces as f64,
        faulty: flipped as f64 > FAULTY_FLIP_FRACTION * result_faces as f64,
        flipped_faces: flipped,
        mesh: out,
        elapsed: start.elapsed(),
    })
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    cost: f64,
    a: u32,
    b: u32,
    stamp_a: u32,
    stamp_b: u32,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // (cost, smaller index, larger index); stamps make stale duplicates distinct
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then(self.a.cmp(&other.a))
            .then(self.b.cmp(&other.b))
            .then(self.stamp_a.cmp(&other.stamp_a))
            .then(self.stamp_b.cmp(&other.stamp_b))
    }
}

struct Weights {
    placement_blend: f64,
    flip: f64,
    aspect: f64,
    length: f64,
}

struct Collapser {
    pos: Vec<Point3<f64>>,
    moved: Vec<bool>,
    faces: Vec<[u32; 3]>,
    face_alive: Vec<bool>,
    alive_faces: usize,
    original_normals: Vec<Vector3<f64>>,
    vertex_faces: Vec<Vec<u32>>,
    vertex_alive: Vec<bool>,
    quadrics: Vec<Quadric>,
    stamps: Vec<u32>,
    heap: BinaryHeap<Reverse<Entry>>,
    weights: Weights,
}

impl Collapser {
    fn new(mesh: &TriangleMesh, params: &ReductionParams) -> Self {
        let (lo, hi) = mesh.bounds();
        let center = nalgebra::center(&lo, &hi);
        let scale = 1.0 / (hi - lo).norm();
        let pos: Vec<Point3<f64>> = mesh
            .vertices()
            .iter()
            .map(|p| Point3::from((p - center) * scale))
            .collect();
        let faces = mesh.faces().to_vec();
        let tris: Vec<[Point3<f64>; 3]> = faces
            .iter()
            .map(|f| [pos[f[0] as usize], pos[f[1] as usize], pos[f[2] as usize]])
            .collect();
        let planes: Vec<Option<(Vector3<f64>, f64)>> = tris.iter().map(face_plane).collect();
        let areas: Vec<f64> = tris
            .iter()
            .map(|t| 0.5 * (t[1] - t[0]).cross(&(t[2] - t[0])).norm())
            .collect();
        let mean_area = areas.iter().sum::<f64>() / areas.len() as f64;
        let area_weighting = params.get(ParamSlot::QuadricAreaWeighting);

        let n = pos.len();
        let mut quadrics = vec![Quadric::zero(); n];
        for (fi, f) in faces.iter().enumerate() {
            if let Some((normal, d)) = planes[fi] {
                let q = Quadric::from_plane(normal, d, area_weight(areas[fi], mean_area, area_weighting));
                for &v in f {
                    quadrics[v as usize] += q;
                }
            }
        }

        let vertex_faces = mesh.vertex_faces();

        // Boundary edges and creases get perpendicular constraint planes.
        let boundary_w = CONSTRAINT_WEIGHT * params.get(ParamSlot::BoundaryWeight);
        let crease_w = CONSTRAINT_WEIGHT * params.get(ParamSlot::SeamPreservationWeight);
        let crease_cos = (FEATURE_ANGLE_MIN_DEG + FEATURE_ANGLE_SPAN_DEG * params.get(ParamSlot::FeatureAngle))
            .to_radians()
            .cos();
        let mut edges: Vec<(u32, u32, u32)> = Vec::with_capacity(faces.len() * 3);
        for (fi, f) in faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                edges.push((a.min(b), a.max(b), fi as u32));
            }
        }
        edges.sort_unstable();
        let mut i = 0;
        while i < edges.len() {
            let mut j = i;
            while j < edges.len() && edges[j].0 == edges[i].0 && edges[j].1 == edges[i].1 {
                j += 1;
            }
            let (a, b) = (edges[i].0 as usize, edges[i].1 as usize);
            let incident: Vec<usize> = edges[i..j].iter().map(|e| e.2 as usize).collect();
            let constrained: Vec<(usize, f64)> = match incident.as_slice() {
                [f] if boundary_w > 0.0 => vec![(*f, boundary_w)],
                [f, g] if crease_w > 0.0 => match (planes[*f], planes[*g]) {
                    (Some((nf, _)), Some((ng, _))) if nf.dot(&ng) < crease_cos => {
                        vec![(*f, crease_w), (*g, crease_w)]
                    }
                    _ => vec![],
                },
                _ => vec![],
            };
            for (f, w) in constrained {
                if let Some((nf, _)) = planes[f] {
                    let e = pos[b] - pos[a];
                    let side = e.cross(&nf);
                    let len = side.norm();
                    if len > 0.0 {
                        let side = side / len;
                        let q = Quadric::from_plane(side, -side.dot(&pos[a].coords), w);
                        quadrics[a] += q;
                        quadrics[b] += q;
                    }
                }
            }
            i = j;
        }

        let original_normals = planes.iter().map(|p| p.map_or(Vector3::zeros(), |(n, _)| n)).collect();
        let alive_faces = faces.len();
        let mut state = Self {
            moved: vec![false; n],
            face_alive: vec![true; faces.len()],
            alive_faces,
            original_normals,
            vertex_alive: vec![true; n],
            quadrics,
            stamps: vec![0; n],
            heap: BinaryHeap::new(),
            weights: Weights {
                placement_blend: params.get(ParamSlot::PlacementPolicyBlend),
                flip: params.get(ParamSlot::NormalFlipPenalty),
                aspect: params.get(ParamSlot::AspectRatioPenalty),
                length: params.get(ParamSlot::EdgeLengthRegularizer),
            },
            pos,
            faces,
            vertex_faces,
        };

        let mut unique: Vec<(u32, u32)> = edges.iter().map(|e| (e.0, e.1)).collect();
        unique.dedup();
        for (a, b) in unique {
            state.push(a, b);
        }
        state
    }

    fn push(&mut self, a: u32, b: u32) {
        let (a, b) = (a.min(b), a.max(b));
        if let Some((cost, _)) = self.candidate(a, b) {
            self.heap.push(Reverse(Entry {
                cost,
                a,
                b,
                stamp_a: self.stamps[a as usize],
                stamp_b: self.stamps[b as usize],
            }));
        }
    }

    fn run(&mut self, target: usize) {
        while self.alive_faces > target {
            let Some(Reverse(e)) = self.heap.pop() else { break };
            let (a, b) = (e.a as usize, e.b as usize);
            if !self.vertex_alive[a]
                || !self.vertex_alive[b]
                || self.stamps[a] != e.stamp_a
                || self.stamps[b] != e.stamp_b
            {
                continue;
            }
            let Some((cost, p)) = self.candidate(e.a, e.b) else {
                continue;
            };
            // neighbouring collapses may have raised the cost since the push
            if cost > e.cost + 1e-12 * (1.0 + e.cost.abs()) {
                self.heap.push(Reverse(Entry { cost, ..e }));
                continue;
            }
            self.collapse(e.a, e.b, p);
        }
    }

    fn neighbors(&self, v: u32) -> Vec<u32> {
        let mut out: Vec<u32> = self.vertex_faces[v as usize]
            .iter()
            .flat_map(|&f| self.faces[f as usize])
            .filter(|&w| w != v)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    fn edge_faces(&self, a: u32, b: u32) -> Vec<u32> {
        self.vertex_faces[a as usize]
            .iter()
            .copied()
            .filter(|&f| self.faces[f as usize].contains(&b))
            .collect()
    }

    fn is_boundary_vertex(&self, v: u32, neighbors: &[u32]) -> bool {
        neighbors.iter().any(|&w| self.edge_faces(v, w).len() == 1)
    }

    /// Cost and placement of collapsing edge (a, b) into a, or `None` if the
    /// collapse would break manifoldness.
    fn candidate(&self, a: u32, b: u32) -> Option<(f64, Point3<f64>)> {
        let shared = self.edge_faces(a, b);
        if shared.is_empty() || shared.len() > 2 {
            return None;
        }
        let na = self.neighbors(a);
        let nb = self.neighbors(b);
        let mut opposite: Vec<u32> = shared
            .iter()
            .map(|&f| *self.faces[f as usize].iter().find(|&&w| w != a && w != b).unwrap())
            .collect();
        opposite.sort_unstable();
        opposite.dedup();
        let common: Vec<u32> = na.iter().copied().filter(|w| nb.binary_search(w).is_ok()).collect();
        if common != opposite {
            return None;
        }
        if shared.len() == 2 && self.is_boundary_vertex(a, &na) && self.is_boundary_vertex(b, &nb) {
            return None;
        }
        let union = na.len() + nb.len() - common.len();
        if union < 5 {
            // union still contains a and b; fewer than three other neighbours
            // would leave a collapsed sliver
            return None;
        }

        let (pa, pb) = (self.pos[a as usize], self.pos[b as usize]);
        let q = self.quadrics[a as usize] + self.quadrics[b as usize];
        let mid = nalgebra::center(&pa, &pb);
        let p = match q.minimizer(MAX_PLACEMENT_CONDITION) {
            Some(opt) => mid + (opt - mid) * self.weights.placement_blend,
            None => mid,
        };
        let error = q.evaluate(&p).max(0.0);

        let mut flips = 0usize;
        let mut aspect = 0.0;
        for &v in &[a, b] {
            for &f in &self.vertex_faces[v as usize] {
                if shared.contains(&f) || (v == b && self.faces[f as usize].contains(&a)) {
                    continue;
                }
                let tri = self.faces[f as usize].map(|w| if w == a || w == b { p } else { self.pos[w as usize] });
                let n = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
                let area2 = n.norm();
                if area2 <= 1e-14 || n.dot(&self.original_normals[f as usize]) <= 0.0 {
                    flips += 1;
                }
                let l2 = (tri[1] - tri[0]).norm_squared()
                    + (tri[2] - tri[1]).norm_squared()
                    + (tri[0] - tri[2]).norm_squared();
                let quality = if l2 > 0.0 {
                    (2.0 * 3f64.sqrt() * area2 / l2).min(1.0)
                } else {
                    0.0
                };
                aspect += (1.0 - quality) * 0.5 * area2;
            }
        }
        let w = &self.weights;
        let cost = error
            + w.flip * FLIP_COST * flips as f64
            + w.aspect * ASPECT_COST * aspect
            + w.length * LENGTH_COST * (pb - pa).norm_squared();
        Some((cost, p))
    }

    fn collapse(&mut self, keep: u32, gone: u32, p: Point3<f64>) {
        let shared = self.edge_faces(keep, gone);
        for &f in &shared {
            self.face_alive[f as usize] = false;
            self.alive_faces -= 1;
            for w in self.faces[f as usize] {
                self.vertex_faces[w as usize].retain(|&g| g != f);
            }
        }
        let moved_faces = std::mem::take(&mut self.vertex_faces[gone as usize]);
        for &f in &moved_faces {
            for w in self.faces[f as usize].iter_mut() {
                if *w == gone {
                    *w = keep;
                }
            }
        }
        let k = keep as usize;
        self.vertex_faces[k].extend(moved_faces);
        self.vertex_faces[k].sort_unstable();
        self.vertex_faces[k].dedup();
        self.vertex_alive[gone as usize] = false;
        self.pos[k] = p;
        self.moved[k] = true;
        let qg = self.quadrics[gone as usize];
        self.quadrics[k] += qg;
        self.stamps[k] += 1;
        for w in self.neighbors(keep) {
            self.push(keep, w);
        }
    }

    /// Compacts the surviving geometry back into model units and counts
    /// faces whose normal turned against the original orientation.
    fn finish(self, original: &TriangleMesh) -> Result<(TriangleMesh, usize), MeshError> {
        let (lo, hi) = original.bounds();
        let center = nalgebra::center(&lo, &hi);
        let diag = (hi - lo).norm();
        let mut remap = vec![u32::MAX; self.pos.len()];
        let mut used = vec![false; self.pos.len()];
        for (f, alive) in self.faces.iter().zip(&self.face_alive) {
            if *alive {
                for &v in f {
                    used[v as usize] = true;
                }
            }
        }
        let mut vertices = Vec::new();
        for (v, &u) in used.iter().enumerate() {
            if u {
                remap[v] = vertices.len() as u32;
                vertices.push(if self.moved[v] {
                    Point3::from(self.pos[v].coords * diag + center.coords)
                } else {
                    original.vertices()[v]
                });
            }
        }
        let mut faces = Vec::with_capacity(self.alive_faces);
        let mut valid = Vec::with_capacity(self.alive_faces);
        let mut flipped = 0;
        for (fi, f) in self.faces.iter().enumerate() {
            if !self.face_alive[fi] {
                continue;
            }
            let tri = f.map(|v| self.pos[v as usize]);
            let n = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
            let ok = n.norm() > 1e-14 && n.dot(&self.original_normals[fi]) > 0.0;
            if !ok {
                flipped += 1;
            }
            valid.push(ok);
            faces.push(f.map(|v| remap[v as usize]));
        }
        Ok((TriangleMesh::new(vertices, faces)?.with_face_flags(valid), flipped))
    }
}
