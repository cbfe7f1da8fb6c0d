//! 3D convex hulls with a half-space representation.
//!
//! `convex_hull` runs quickhull on full-rank input. Degenerate input
//! (coplanar, collinear, or coincident points — common for flat CAD parts)
//! falls back to the best-fit lower-dimensional hull with every half-space
//! pushed outward by `DEGENERATE_INFLATION`, so containment tests remain
//! meaningful.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::Point3;

/// Boundary tolerance for containment tests, meters.
pub const CONTAINMENT_TOL: f64 = 1e-9;

/// Outward offset applied to every half-space of a degenerate hull, meters.
pub const DEGENERATE_INFLATION: f64 = 1e-4;

/// Closed half-space `normal . x <= offset` with unit outward normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfSpace {
    pub normal: Point3,
    pub offset: f64,
}

impl HalfSpace {
    /// Positive outside, negative inside.
    #[inline]
    pub fn signed_distance(&self, p: Point3) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

/// Bounded convex hull: half-spaces plus the generating hull vertices.
///
/// For full-rank hulls `triangles` holds an outward-wound surface
/// triangulation (used for volume); degenerate hulls carry none.
#[derive(Debug, Clone)]
pub struct ConvexHull3 {
    planes: Vec<HalfSpace>,
    vertices: Vec<Point3>,
    triangles: Vec<[u32; 3]>,
    degenerate: bool,
}

impl ConvexHull3 {
    #[inline]
    pub fn planes(&self) -> &[HalfSpace] {
        &self.planes
    }

    #[inline]
    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    #[inline]
    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    /// Number of (merged, coplanar) faces.
    #[inline]
    pub fn num_faces(&self) -> usize {
        self.planes.len()
    }

    #[inline]
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Mean of the hull vertices.
    pub fn centroid(&self) -> Point3 {
        let mut c = Point3::ZERO;
        for &v in &self.vertices {
            c += v;
        }
        c / self.vertices.len().max(1) as f64
    }

    /// True iff `p` satisfies every half-space within `CONTAINMENT_TOL`.
    pub fn contains(&self, p: Point3) -> bool {
        self.contains_with(p, CONTAINMENT_TOL)
    }

    pub fn contains_with(&self, p: Point3, tol: f64) -> bool {
        self.planes.iter().all(|h| h.signed_distance(p) <= tol)
    }

    /// Enclosed volume (0 for degenerate hulls).
    pub fn volume(&self) -> f64 {
        let r = self.centroid();
        let mut v = 0.0;
        for tri in &self.triangles {
            let a = self.vertices[tri[0] as usize] - r;
            let b = self.vertices[tri[1] as usize] - r;
            let c = self.vertices[tri[2] as usize] - r;
            v += a.dot(b.cross(c));
        }
        (v / 6.0).abs()
    }

    /// Hull scaled about its vertex centroid. Containment is monotone in the
    /// factor: `a <= b` implies `scaled(a)` is contained in `scaled(b)`.
    pub fn scaled(&self, factor: f64) -> Result<ConvexHull3> {
        if !(factor > 0.0) {
            return Err(Error::InvalidParameter("scale factor must be positive"));
        }
        let c = self.centroid();
        Ok(ConvexHull3 {
            planes: self
                .planes
                .iter()
                .map(|h| HalfSpace {
                    normal: h.normal,
                    offset: factor * (h.offset - h.normal.dot(c)) + h.normal.dot(c),
                })
                .collect(),
            vertices: self.vertices.iter().map(|&v| c + (v - c) * factor).collect(),
            triangles: self.triangles.clone(),
            degenerate: self.degenerate,
        })
    }
}

struct Face {
    verts: [u32; 3],
    plane: HalfSpace,
    alive: bool,
    outside: Vec<u32>,
    far: u32,
    far_dist: f64,
}

impl Face {
    fn assign(&mut self, idx: u32, dist: f64) {
        if dist > self.far_dist {
            self.far_dist = dist;
            self.far = idx;
        }
        self.outside.push(idx);
    }
}

fn face_plane(points: &[Point3], verts: [u32; 3], interior: Point3) -> (HalfSpace, bool) {
    let a = points[verts[0] as usize];
    let b = points[verts[1] as usize];
    let c = points[verts[2] as usize];
    let mut normal = (b - a).cross(c - a).normalized().unwrap_or(Point3::new(0.0, 0.0, 1.0));
    let mut flipped = false;
    if normal.dot(interior) > normal.dot(a) {
        normal = -normal;
        flipped = true;
    }
    (HalfSpace { normal, offset: normal.dot(a) }, flipped)
}

/// Convex hull of an arbitrary point set.
pub fn convex_hull(points: &[Point3]) -> Result<ConvexHull3> {
    if points.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFiniteCoordinate);
    }

    let scale = points.iter().fold(0.0f64, |m, p| m.max(p.x.abs()).max(p.y.abs()).max(p.z.abs()));
    let eps_rank = 1e-9 * (1.0 + scale);
    let eps = 1e-10 * (1.0 + scale);

    // --- initial simplex / rank detection ---
    let mut extremes = [0usize; 6];
    for axis in 0..3 {
        let mut lo = 0;
        let mut hi = 0;
        for (i, p) in points.iter().enumerate() {
            if p.axis(axis) < points[lo].axis(axis) {
                lo = i;
            }
            if p.axis(axis) > points[hi].axis(axis) {
                hi = i;
            }
        }
        extremes[2 * axis] = lo;
        extremes[2 * axis + 1] = hi;
    }
    let (mut e0, mut e1, mut best) = (extremes[0], extremes[0], -1.0);
    for &i in &extremes {
        for &j in &extremes {
            let d = points[i].dist(points[j]);
            if d > best {
                best = d;
                e0 = i;
                e1 = j;
            }
        }
    }
    if best <= eps_rank {
        return Ok(degenerate_point(points[e0]));
    }

    let dir = (points[e1] - points[e0]).normalized().expect("distinct endpoints");
    let line_dist = |p: Point3| {
        let d = p - points[e0];
        (d - dir * d.dot(dir)).norm()
    };
    let mut e2 = 0;
    let mut best = -1.0;
    for (i, &p) in points.iter().enumerate() {
        let d = line_dist(p);
        if d > best {
            best = d;
            e2 = i;
        }
    }
    if best <= eps_rank {
        return Ok(degenerate_segment(points, dir));
    }

    let plane_n = (points[e1] - points[e0])
        .cross(points[e2] - points[e0])
        .normalized()
        .expect("non-collinear");
    let plane_d = plane_n.dot(points[e0]);
    let mut e3 = 0;
    let mut best = -1.0;
    for (i, &p) in points.iter().enumerate() {
        let d = (plane_n.dot(p) - plane_d).abs();
        if d > best {
            best = d;
            e3 = i;
        }
    }
    if best <= eps_rank {
        return Ok(degenerate_plane(points, plane_n, scale));
    }

    // --- quickhull proper ---
    let (v0, v1, v2, v3) = (e0 as u32, e1 as u32, e2 as u32, e3 as u32);
    let interior =
        (points[e0] + points[e1] + points[e2] + points[e3]) / 4.0;
    let mut faces: Vec<Face> = Vec::new();
    for verts in [[v0, v1, v2], [v0, v1, v3], [v0, v2, v3], [v1, v2, v3]] {
        let (plane, flipped) = face_plane(points, verts, interior);
        let verts = if flipped { [verts[0], verts[2], verts[1]] } else { verts };
        faces.push(Face { verts, plane, alive: true, outside: Vec::new(), far: 0, far_dist: 0.0 });
    }

    let simplex = [v0, v1, v2, v3];
    for i in 0..points.len() as u32 {
        if simplex.contains(&i) {
            continue;
        }
        let mut best_face = usize::MAX;
        let mut best_dist = eps;
        for (f, face) in faces.iter().enumerate() {
            let d = face.plane.signed_distance(points[i as usize]);
            if d > best_dist {
                best_dist = d;
                best_face = f;
            }
        }
        if best_face != usize::MAX {
            faces[best_face].assign(i, best_dist);
        }
    }

    let mut queue: Vec<usize> = (0..faces.len()).collect();
    let mut cursor = 0;
    let iteration_cap = 16 * points.len() + 64;
    let mut iterations = 0;

    while cursor < queue.len() {
        let f = queue[cursor];
        cursor += 1;
        if !faces[f].alive || faces[f].outside.is_empty() {
            continue;
        }
        iterations += 1;
        if iterations > iteration_cap {
            break; // numerical stalemate; return current (valid) hull
        }
        let apex = faces[f].far;
        let apex_p = points[apex as usize];

        // adjacency over alive faces for this iteration
        let mut edge_faces: BTreeMap<(u32, u32), [usize; 2]> = BTreeMap::new();
        for (id, face) in faces.iter().enumerate() {
            if !face.alive {
                continue;
            }
            for e in 0..3 {
                let a = face.verts[e];
                let b = face.verts[(e + 1) % 3];
                let key = (a.min(b), a.max(b));
                let entry = edge_faces.entry(key).or_insert([usize::MAX; 2]);
                if entry[0] == usize::MAX {
                    entry[0] = id;
                } else {
                    entry[1] = id;
                }
            }
        }
        let other_face = |key: (u32, u32), me: usize| -> usize {
            let pair = edge_faces[&key];
            if pair[0] == me {
                pair[1]
            } else {
                pair[0]
            }
        };

        // flood-fill the faces visible from the apex
        let mut visible = alloc::vec![false; faces.len()];
        let mut stack = alloc::vec![f];
        visible[f] = true;
        let mut visible_ids = alloc::vec![f];
        while let Some(v) = stack.pop() {
            for e in 0..3 {
                let a = faces[v].verts[e];
                let b = faces[v].verts[(e + 1) % 3];
                let n = other_face((a.min(b), a.max(b)), v);
                if n != usize::MAX
                    && !visible[n]
                    && faces[n].plane.signed_distance(apex_p) > eps
                {
                    visible[n] = true;
                    visible_ids.push(n);
                    stack.push(n);
                }
            }
        }
        visible_ids.sort_unstable();

        // horizon: directed edges of visible faces whose neighbor is hidden
        let mut horizon: Vec<(u32, u32)> = Vec::new();
        let mut pool: Vec<u32> = Vec::new();
        for &v in &visible_ids {
            for e in 0..3 {
                let a = faces[v].verts[e];
                let b = faces[v].verts[(e + 1) % 3];
                let n = other_face((a.min(b), a.max(b)), v);
                if n == usize::MAX || !visible[n] {
                    horizon.push((a, b));
                }
            }
            faces[v].alive = false;
            pool.append(&mut faces[v].outside);
        }

        let mut new_faces: Vec<usize> = Vec::new();
        for (a, b) in horizon {
            let verts = [a, b, apex];
            let (plane, flipped) = face_plane(points, verts, interior);
            let verts = if flipped { [verts[0], verts[2], verts[1]] } else { verts };
            new_faces.push(faces.len());
            faces.push(Face {
                verts,
                plane,
                alive: true,
                outside: Vec::new(),
                far: 0,
                far_dist: 0.0,
            });
        }

        pool.sort_unstable();
        for idx in pool {
            if idx == apex {
                continue;
            }
            let p = points[idx as usize];
            let mut best_face = usize::MAX;
            let mut best_dist = eps;
            for &nf in &new_faces {
                let d = faces[nf].plane.signed_distance(p);
                if d > best_dist {
                    best_dist = d;
                    best_face = nf;
                }
            }
            if best_face != usize::MAX {
                faces[best_face].assign(idx, best_dist);
            }
        }
        for &nf in &new_faces {
            if !faces[nf].outside.is_empty() {
                queue.push(nf);
            }
        }
    }

    // --- assemble output ---
    let mut vertex_ids: Vec<u32> = faces
        .iter()
        .filter(|f| f.alive)
        .flat_map(|f| f.verts.iter().copied())
        .collect();
    vertex_ids.sort_unstable();
    vertex_ids.dedup();
    let mut remap: BTreeMap<u32, u32> = BTreeMap::new();
    for (new, &old) in vertex_ids.iter().enumerate() {
        remap.insert(old, new as u32);
    }
    let vertices: Vec<Point3> = vertex_ids.iter().map(|&i| points[i as usize]).collect();
    let triangles: Vec<[u32; 3]> = faces
        .iter()
        .filter(|f| f.alive)
        .map(|f| [remap[&f.verts[0]], remap[&f.verts[1]], remap[&f.verts[2]]])
        .collect();

    // merge coplanar face planes; offsets are support-function values over
    // the hull vertices, so containment of every input point is preserved
    let mut merged: Vec<HalfSpace> = Vec::new();
    for face in faces.iter().filter(|f| f.alive) {
        let dup = merged.iter().any(|h| {
            h.normal.dot(face.plane.normal) > 1.0 - 1e-10
                && (h.offset - face.plane.offset).abs() <= 1e-8 * (1.0 + h.offset.abs())
        });
        if !dup {
            merged.push(face.plane);
        }
    }
    for h in &mut merged {
        h.offset = vertices.iter().map(|&v| h.normal.dot(v)).fold(f64::NEG_INFINITY, f64::max);
    }

    Ok(ConvexHull3 { planes: merged, vertices, triangles, degenerate: false })
}

/// Orthonormal basis (u, v) perpendicular to the unit vector `n`.
fn plane_basis(n: Point3) -> (Point3, Point3) {
    let helper = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
        Point3::new(1.0, 0.0, 0.0)
    } else if n.y.abs() <= n.z.abs() {
        Point3::new(0.0, 1.0, 0.0)
    } else {
        Point3::new(0.0, 0.0, 1.0)
    };
    let u = n.cross(helper).normalized().expect("helper not parallel");
    let v = n.cross(u);
    (u, v)
}

fn degenerate_point(p: Point3) -> ConvexHull3 {
    let planes = [
        Point3::new(1.0, 0.0, 0.0),
        Point3::new(-1.0, 0.0, 0.0),
        Point3::new(0.0, 1.0, 0.0),
        Point3::new(0.0, -1.0, 0.0),
        Point3::new(0.0, 0.0, 1.0),
        Point3::new(0.0, 0.0, -1.0),
    ]
    .iter()
    .map(|&normal| HalfSpace { normal, offset: normal.dot(p) + DEGENERATE_INFLATION })
    .collect();
    ConvexHull3 { planes, vertices: alloc::vec![p], triangles: Vec::new(), degenerate: true }
}

fn degenerate_segment(points: &[Point3], dir: Point3) -> ConvexHull3 {
    let (mut lo_i, mut hi_i) = (0, 0);
    let (mut lo_t, mut hi_t) = (f64::INFINITY, f64::NEG_INFINITY);
    for (i, &p) in points.iter().enumerate() {
        let t = dir.dot(p);
        if t < lo_t {
            lo_t = t;
            lo_i = i;
        }
        if t > hi_t {
            hi_t = t;
            hi_i = i;
        }
    }
    let a = points[lo_i];
    let b = points[hi_i];
    let (u, v) = plane_basis(dir);
    let planes = alloc::vec![
        HalfSpace { normal: dir, offset: dir.dot(b) + DEGENERATE_INFLATION },
        HalfSpace { normal: -dir, offset: -dir.dot(a) + DEGENERATE_INFLATION },
        HalfSpace { normal: u, offset: u.dot(a) + DEGENERATE_INFLATION },
        HalfSpace { normal: -u, offset: -u.dot(a) + DEGENERATE_INFLATION },
        HalfSpace { normal: v, offset: v.dot(a) + DEGENERATE_INFLATION },
        HalfSpace { normal: -v, offset: -v.dot(a) + DEGENERATE_INFLATION },
    ];
    ConvexHull3 { planes, vertices: alloc::vec![a, b], triangles: Vec::new(), degenerate: true }
}

fn degenerate_plane(points: &[Point3], n: Point3, scale: f64) -> ConvexHull3 {
    let (u, v) = plane_basis(n);
    let origin = points[0];
    let mut projected: Vec<(f64, f64, u32)> = points
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let d = p - origin;
            (u.dot(d), v.dot(d), i as u32)
        })
        .collect();
    projected.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    projected.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);

    // monotone chain; collinear points on an edge are dropped
    let eps_area = 1e-12 * (1.0 + scale) * (1.0 + scale);
    let cross =
        |o: &(f64, f64, u32), a: &(f64, f64, u32), b: &(f64, f64, u32)| -> f64 {
            (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
        };
    let mut ring: Vec<(f64, f64, u32)> = Vec::new();
    for p in &projected {
        while ring.len() >= 2 && cross(&ring[ring.len() - 2], &ring[ring.len() - 1], p) <= eps_area {
            ring.pop();
        }
        ring.push(*p);
    }
    let lower_len = ring.len() + 1;
    for p in projected.iter().rev() {
        while ring.len() >= lower_len && cross(&ring[ring.len() - 2], &ring[ring.len() - 1], p) <= eps_area
        {
            ring.pop();
        }
        ring.push(*p);
    }
    ring.pop(); // last point repeats the first

    let hull_points: Vec<Point3> = ring.iter().map(|&(_, _, i)| points[i as usize]).collect();
    if hull_points.len() < 3 {
        // numerically collinear after all
        let dir = if hull_points.len() == 2 {
            (hull_points[1] - hull_points[0]).normalized()
        } else {
            None
        };
        return match dir {
            Some(d) => degenerate_segment(points, d),
            None => degenerate_point(points[0]),
        };
    }

    let mut planes = Vec::with_capacity(hull_points.len() + 2);
    // caps
    let d_hi = points.iter().map(|&p| n.dot(p)).fold(f64::NEG_INFINITY, f64::max);
    let d_lo = points.iter().map(|&p| n.dot(p)).fold(f64::INFINITY, f64::min);
    planes.push(HalfSpace { normal: n, offset: d_hi + DEGENERATE_INFLATION });
    planes.push(HalfSpace { normal: -n, offset: -d_lo + DEGENERATE_INFLATION });
    // sides: ring is counter-clockwise as seen from +n, so edge x n points outward
    for e in 0..hull_points.len() {
        let a = hull_points[e];
        let b = hull_points[(e + 1) % hull_points.len()];
        if let Some(edge) = (b - a).normalized() {
            let side = edge.cross(n).normalized().expect("edge perpendicular to n");
            let offset = hull_points
                .iter()
                .map(|&p| side.dot(p))
                .fold(f64::NEG_INFINITY, f64::max);
            planes.push(HalfSpace { normal: side, offset: offset + DEGENERATE_INFLATION });
        }
    }
    ConvexHull3 { planes, vertices: hull_points, triangles: Vec::new(), degenerate: true }
}
