//! Exact closest-point-on-mesh queries over an AABB tree.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::Point3;
use crate::mesh::{PosedModel, TriangleMesh};

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone, Copy)]
struct Aabb {
    lo: Point3,
    hi: Point3,
}

impl Aabb {
    fn empty() -> Self {
        Aabb { lo: Point3::splat(f64::INFINITY), hi: Point3::splat(f64::NEG_INFINITY) }
    }

    fn grow(&mut self, p: Point3) {
        self.lo = self.lo.min_componentwise(p);
        self.hi = self.hi.max_componentwise(p);
    }

    fn dist_squared(&self, p: Point3) -> f64 {
        let dx = (self.lo.x - p.x).max(0.0).max(p.x - self.hi.x);
        let dy = (self.lo.y - p.y).max(0.0).max(p.y - self.hi.y);
        let dz = (self.lo.z - p.z).max(0.0).max(p.z - self.hi.z);
        dx * dx + dy * dy + dz * dz
    }
}

#[derive(Debug, Clone)]
enum Node {
    Split { aabb: Aabb, left: u32, right: u32 },
    Leaf { aabb: Aabb, start: u32, end: u32 },
}

/// Result of a closest-point query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestHit {
    /// Unsigned distance to the surface, meters.
    pub distance: f64,
    /// Foot point on the returned triangle.
    pub point: Point3,
    /// Index of the triangle containing the foot point.
    pub triangle: u32,
}

/// Immutable accelerated distance query over a world-frame triangle mesh.
#[derive(Debug, Clone)]
pub struct MeshDistanceQuery {
    tris: Vec<[Point3; 3]>,
    tri_ids: Vec<u32>,
    nodes: Vec<Node>,
    root: u32,
}

impl MeshDistanceQuery {
    /// Builds the tree over the model's posed (world-frame) surface.
    pub fn new(model: &PosedModel) -> Result<Self> {
        Self::from_mesh(&model.world_mesh())
    }

    /// Builds the tree over a mesh already in the query frame.
    pub fn from_mesh(mesh: &TriangleMesh) -> Result<Self> {
        if mesh.num_triangles() == 0 {
            return Err(Error::EmptyMesh);
        }
        let tris: Vec<[Point3; 3]> = (0..mesh.num_triangles()).map(|t| mesh.triangle(t)).collect();
        let centroids: Vec<Point3> =
            tris.iter().map(|t| (t[0] + t[1] + t[2]) / 3.0).collect();
        let mut order: Vec<u32> = (0..tris.len() as u32).collect();
        let mut nodes = Vec::new();
        let root = build(&tris, &centroids, &mut order, 0, tris.len(), &mut nodes);
        // lay triangles out in leaf order for cache-friendly scans
        let tris = order.iter().map(|&i| tris[i as usize]).collect();
        Ok(MeshDistanceQuery { tris, tri_ids: order, nodes, root })
    }

    pub fn num_triangles(&self) -> usize {
        self.tris.len()
    }

    /// Exact closest surface point to `p` (minimum over all triangles).
    pub fn closest(&self, p: Point3) -> ClosestHit {
        let mut best = ClosestHit { distance: f64::INFINITY, point: Point3::ZERO, triangle: 0 };
        let mut best_d2 = f64::INFINITY;
        self.closest_recurse(self.root, p, &mut best, &mut best_d2);
        best.distance = libm::sqrt(best_d2);
        best
    }

    /// Shorthand when only the distance is needed.
    pub fn distance(&self, p: Point3) -> f64 {
        self.closest(p).distance
    }

    fn closest_recurse(&self, node: u32, p: Point3, best: &mut ClosestHit, best_d2: &mut f64) {
        match self.nodes[node as usize] {
            Node::Leaf { start, end, .. } => {
                for slot in start as usize..end as usize {
                    let [a, b, c] = self.tris[slot];
                    let foot = closest_point_on_triangle(p, a, b, c);
                    let d2 = foot.dist_squared(p);
                    if d2 < *best_d2 {
                        *best_d2 = d2;
                        best.point = foot;
                        best.triangle = self.tri_ids[slot];
                    }
                }
            }
            Node::Split { left, right, .. } => {
                let dl = self.node_aabb(left).dist_squared(p);
                let dr = self.node_aabb(right).dist_squared(p);
                let (first, d_first, second, d_second) =
                    if dl <= dr { (left, dl, right, dr) } else { (right, dr, left, dl) };
                if d_first < *best_d2 {
                    self.closest_recurse(first, p, best, best_d2);
                }
                if d_second < *best_d2 {
                    self.closest_recurse(second, p, best, best_d2);
                }
            }
        }
    }

    fn node_aabb(&self, node: u32) -> Aabb {
        match self.nodes[node as usize] {
            Node::Leaf { aabb, .. } | Node::Split { aabb, .. } => aabb,
        }
    }
}

fn build(
    tris: &[[Point3; 3]],
    centroids: &[Point3],
    order: &mut [u32],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node>,
) -> u32 {
    let mut aabb = Aabb::empty();
    for &t in &order[start..end] {
        for &v in &tris[t as usize] {
            aabb.grow(v);
        }
    }
    let id = nodes.len() as u32;
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf { aabb, start: start as u32, end: end as u32 });
        return id;
    }
    let mut clo = Point3::splat(f64::INFINITY);
    let mut chi = Point3::splat(f64::NEG_INFINITY);
    for &t in &order[start..end] {
        clo = clo.min_componentwise(centroids[t as usize]);
        chi = chi.max_componentwise(centroids[t as usize]);
    }
    let axis = (chi - clo).largest_axis();
    let mid = (end - start) / 2;
    order[start..end].select_nth_unstable_by(mid, |&a, &b| {
        centroids[a as usize]
            .axis(axis)
            .total_cmp(&centroids[b as usize].axis(axis))
            .then(a.cmp(&b))
    });
    nodes.push(Node::Split { aabb, left: 0, right: 0 });
    let left = build(tris, centroids, order, start, start + mid, nodes);
    let right = build(tris, centroids, order, start + mid, end, nodes);
    if let Node::Split { left: l, right: r, .. } = &mut nodes[id as usize] {
        *l = left;
        *r = right;
    }
    id
}

/// Closest point to `p` on triangle (a, b, c), handling all Voronoi regions.
pub fn closest_point_on_triangle(p: Point3, a: Point3, b: Point3, c: Point3) -> Point3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }

    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }

    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }

    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Pose;
    use crate::mesh::box_mesh;
    use alloc::string::String;
    use alloc::vec::Vec;
    use rand::{Rng, SeedableRng};

    fn unit_cube_query() -> MeshDistanceQuery {
        let model = PosedModel::new(
            box_mesh(Point3::splat(1.0)),
            Pose::IDENTITY,
            String::from("cube"),
        )
        .unwrap();
        MeshDistanceQuery::new(&model).unwrap()
    }

    #[test]
    fn vertex_query_has_zero_distance() {
        let q = unit_cube_query();
        let hit = q.closest(Point3::new(0.5, 0.5, 0.5));
        assert!(hit.distance < 1e-12);
    }

    #[test]
    fn face_distance_is_analytic() {
        let q = unit_cube_query();
        let hit = q.closest(Point3::new(0.0, 0.0, 2.0));
        assert!((hit.distance - 1.5).abs() < 1e-12);
        assert!(hit.point.dist(Point3::new(0.0, 0.0, 0.5)) < 1e-12);
    }

    #[test]
    fn empty_mesh_is_an_error() {
        let mesh = TriangleMesh::new(Vec::new(), Vec::new()).unwrap();
        assert_eq!(MeshDistanceQuery::from_mesh(&mesh).unwrap_err(), Error::EmptyMesh);
    }

    #[test]
    fn matches_brute_force_on_random_mesh() {
        // irregular triangle soup vs exhaustive per-triangle minimum
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for t in 0..500u32 {
            let base = Point3::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            for _ in 0..3 {
                vertices.push(
                    base + Point3::new(
                        rng.gen_range(-0.3..0.3),
                        rng.gen_range(-0.3..0.3),
                        rng.gen_range(-0.3..0.3),
                    ),
                );
            }
            triangles.push([3 * t, 3 * t + 1, 3 * t + 2]);
        }
        let mesh = TriangleMesh::new(vertices, triangles).unwrap();
        let query = MeshDistanceQuery::from_mesh(&mesh).unwrap();
        for _ in 0..100 {
            let p = Point3::new(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            );
            let brute = (0..mesh.num_triangles())
                .map(|t| {
                    let [a, b, c] = mesh.triangle(t);
                    closest_point_on_triangle(p, a, b, c).dist(p)
                })
                .fold(f64::INFINITY, f64::min);
            let fast = query.distance(p);
            assert!(
                (fast - brute).abs() <= 1e-9 * brute.max(1.0),
                "bvh {fast} vs brute {brute}"
            );
        }
    }

    #[test]
    fn foot_point_lies_on_reported_triangle() {
        let q = unit_cube_query();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let p = Point3::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            let hit = q.closest(p);
            let slot = q.tri_ids.iter().position(|&t| t == hit.triangle).unwrap();
            let [a, b, c] = q.tris[slot];
            let recomputed = closest_point_on_triangle(hit.point, a, b, c);
            assert!(recomputed.dist(hit.point) < 1e-9);
        }
    }
}
