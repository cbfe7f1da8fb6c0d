//! Exact k-nearest-neighbor and fixed-radius queries over a kd-tree.
//!
//! Results are deterministic: ties on distance are broken by the lower point
//! index, and radius queries return indices in ascending order.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::math::Point3;

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone)]
enum Node {
    Split { axis: u8, value: f64, left: u32, right: u32 },
    Leaf { start: u32, end: u32 },
}

/// Spatial acceleration structure over a fixed set of points.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    points: Vec<Point3>,
    order: Vec<u32>,
    nodes: Vec<Node>,
    root: u32,
}

/// Max-heap key ordering worst candidate first: larger distance, then larger index.
#[derive(PartialEq)]
struct Candidate {
    dist_sq: f64,
    index: u32,
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, o: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Candidate {
    fn cmp(&self, o: &Self) -> core::cmp::Ordering {
        self.dist_sq.total_cmp(&o.dist_sq).then(self.index.cmp(&o.index))
    }
}

impl SpatialIndex {
    /// Builds the index; errors on an empty cloud.
    pub fn new(cloud: &PointCloud) -> Result<Self> {
        Self::from_points(cloud.points())
    }

    pub fn from_points(points: &[Point3]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let points = points.to_vec();
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        let mut nodes = Vec::new();
        let root = build(&points, &mut order, 0, points.len(), &mut nodes);
        Ok(SpatialIndex { points, order, nodes, root })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> Point3 {
        self.points[i]
    }

    #[inline]
    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    /// The `k` nearest stored points to `query`, sorted by (distance, index).
    ///
    /// A stored point equal to `query` is its own nearest neighbor at
    /// distance 0. Returns fewer than `k` entries only when the index holds
    /// fewer points.
    pub fn knn(&self, query: Point3, k: usize) -> Vec<(u32, f64)> {
        if k == 0 {
            return Vec::new();
        }
        let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
        self.knn_recurse(self.root, query, k, &mut heap);
        let mut out: Vec<(f64, u32)> = heap.into_iter().map(|c| (c.dist_sq, c.index)).collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        out.into_iter().map(|(d2, i)| (i, libm::sqrt(d2))).collect()
    }

    fn knn_recurse(&self, node: u32, query: Point3, k: usize, heap: &mut BinaryHeap<Candidate>) {
        match self.nodes[node as usize] {
            Node::Leaf { start, end } => {
                for &idx in &self.order[start as usize..end as usize] {
                    let d2 = self.points[idx as usize].dist_squared(query);
                    let cand = Candidate { dist_sq: d2, index: idx };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().expect("heap non-empty") {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let delta = query.axis(axis as usize) - value;
                let (near, far) = if delta <= 0.0 { (left, right) } else { (right, left) };
                self.knn_recurse(near, query, k, heap);
                let worst = heap.peek().map(|c| c.dist_sq).unwrap_or(f64::INFINITY);
                if heap.len() < k || delta * delta <= worst {
                    self.knn_recurse(far, query, k, heap);
                }
            }
        }
    }

    /// All stored points within `radius` (inclusive) of `query`, as ascending indices.
    pub fn radius(&self, query: Point3, radius: f64) -> Vec<u32> {
        let mut out = Vec::new();
        if radius < 0.0 {
            return out;
        }
        self.radius_recurse(self.root, query, radius * radius, &mut out);
        out.sort_unstable();
        out
    }

    /// True if any stored point other than `exclude` lies within `radius` of
    /// `query` and fails `pred` ... see `eval::boundary_mask` for the use.
    pub(crate) fn radius_any<F: FnMut(u32) -> bool>(
        &self,
        query: Point3,
        radius: f64,
        mut hit: F,
    ) -> bool {
        if radius < 0.0 {
            return false;
        }
        self.radius_any_recurse(self.root, query, radius * radius, &mut hit)
    }

    fn radius_any_recurse<F: FnMut(u32) -> bool>(
        &self,
        node: u32,
        query: Point3,
        r2: f64,
        hit: &mut F,
    ) -> bool {
        match self.nodes[node as usize] {
            Node::Leaf { start, end } => {
                for &idx in &self.order[start as usize..end as usize] {
                    if self.points[idx as usize].dist_squared(query) <= r2 && hit(idx) {
                        return true;
                    }
                }
                false
            }
            Node::Split { axis, value, left, right } => {
                let delta = query.axis(axis as usize) - value;
                let (near, far) = if delta <= 0.0 { (left, right) } else { (right, left) };
                if self.radius_any_recurse(near, query, r2, hit) {
                    return true;
                }
                if delta * delta <= r2 {
                    return self.radius_any_recurse(far, query, r2, hit);
                }
                false
            }
        }
    }

    fn radius_recurse(&self, node: u32, query: Point3, r2: f64, out: &mut Vec<u32>) {
        match self.nodes[node as usize] {
            Node::Leaf { start, end } => {
                for &idx in &self.order[start as usize..end as usize] {
                    if self.points[idx as usize].dist_squared(query) <= r2 {
                        out.push(idx);
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let delta = query.axis(axis as usize) - value;
                let (near, far) = if delta <= 0.0 { (left, right) } else { (right, left) };
                self.radius_recurse(near, query, r2, out);
                if delta * delta <= r2 {
                    self.radius_recurse(far, query, r2, out);
                }
            }
        }
    }

    /// Per-point neighbor lists of the `k` nearest other points (self excluded),
    /// each sorted by (distance, index).
    pub fn neighbor_lists(&self, k: usize) -> Vec<Vec<u32>> {
        (0..self.points.len())
            .map(|i| {
                self.knn(self.points[i], k + 1)
                    .into_iter()
                    .filter(|&(j, _)| j as usize != i)
                    .take(k)
                    .map(|(j, _)| j)
                    .collect()
            })
            .collect()
    }
}

fn build(points: &[Point3], order: &mut [u32], start: usize, end: usize, nodes: &mut Vec<Node>) -> u32 {
    let id = nodes.len() as u32;
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf { start: start as u32, end: end as u32 });
        return id;
    }
    let slice = &mut order[start..end];
    let mut lo = points[slice[0] as usize];
    let mut hi = lo;
    for &i in slice.iter() {
        lo = lo.min_componentwise(points[i as usize]);
        hi = hi.max_componentwise(points[i as usize]);
    }
    let axis = (hi - lo).largest_axis();
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| {
        points[a as usize]
            .axis(axis)
            .total_cmp(&points[b as usize].axis(axis))
            .then(a.cmp(&b))
    });
    let split_value = points[slice[mid] as usize].axis(axis);
    nodes.push(Node::Split { axis: axis as u8, value: split_value, left: 0, right: 0 });
    let left = build(points, order, start, start + mid, nodes);
    let right = build(points, order, start + mid, end, nodes);
    if let Node::Split { left: l, right: r, .. } = &mut nodes[id as usize] {
        *l = left;
        *r = right;
    }
    id
}
