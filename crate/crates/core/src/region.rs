//! Region growing over a section and per-region scoring against the object
//! hull H_obj.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::hull::{convex_hull, ConvexHull3};
use crate::kdtree::SpatialIndex;
use crate::math::Point3;

/// Region id given to points that never satisfied the growing constraints.
pub const UNASSIGNED_REGION: u32 = 0;

/// Tunables for region growing and its adaptation loop.
#[derive(Debug, Clone, Copy)]
pub struct RegionParams {
    /// Smoothness constraint: max angle between seed and neighbor normals, degrees.
    pub theta_deg: f64,
    /// Curvature threshold below which a grown point seeds further growth.
    pub kappa: f64,
    /// Regions smaller than this dissolve to UNASSIGNED.
    pub min_region_size: usize,
    /// Neighbors considered per point during growth.
    pub neighbors: usize,
    /// Max adaptation iterations.
    pub max_iters: usize,
    /// Fragmentation cap: more than points/divisor regions triggers loosening.
    pub fragmentation_divisor: usize,
}

impl Default for RegionParams {
    fn default() -> Self {
        RegionParams {
            theta_deg: 15.0,
            kappa: 0.05,
            min_region_size: 10,
            neighbors: 16,
            max_iters: 8,
            fragmentation_divisor: 20,
        }
    }
}

/// Result of region growing. Region ids are 1-based; 0 means unassigned.
#[derive(Debug, Clone)]
pub struct RegionSegmentation {
    pub region_ids: Vec<u32>,
    pub num_regions: usize,
    /// Constraints the returned segmentation was grown with.
    pub theta_deg: f64,
    pub kappa: f64,
    /// Extra adaptation iterations spent after the initial attempt.
    pub adapted_iterations: usize,
    /// True when adaptation gave up without reaching 2..=cap regions.
    pub flagged: bool,
}

/// Plain region growing: seeds from the lowest-curvature unvisited point, a
/// neighbor joins when its normal is within `theta_deg` of the current seed
/// point's normal, and joined points with curvature <= `kappa` seed further.
pub fn grow_regions(
    neighbors: &[Vec<u32>],
    normals: &[Point3],
    curvatures: &[f64],
    theta_deg: f64,
    kappa: f64,
    min_region_size: usize,
) -> RegionSegmentation {
    let n = neighbors.len();
    debug_assert_eq!(normals.len(), n);
    debug_assert_eq!(curvatures.len(), n);
    let cos_theta = libm::cos(theta_deg.to_radians());

    let mut seed_order: Vec<u32> = (0..n as u32).collect();
    seed_order.sort_by(|&a, &b| {
        curvatures[a as usize].total_cmp(&curvatures[b as usize]).then(a.cmp(&b))
    });

    let mut visited = alloc::vec![false; n];
    let mut region_ids = alloc::vec![UNASSIGNED_REGION; n];
    let mut num_regions = 0usize;
    let mut members: Vec<u32> = Vec::new();
    let mut frontier: VecDeque<u32> = VecDeque::new();

    for &start in &seed_order {
        if visited[start as usize] {
            continue;
        }
        members.clear();
        frontier.clear();
        visited[start as usize] = true;
        members.push(start);
        frontier.push_back(start);
        while let Some(seed) = frontier.pop_front() {
            let seed_normal = normals[seed as usize];
            for &nb in &neighbors[seed as usize] {
                if visited[nb as usize] {
                    continue;
                }
                // |dot| keeps the test stable under normal sign flips
                if seed_normal.dot(normals[nb as usize]).abs() >= cos_theta {
                    visited[nb as usize] = true;
                    members.push(nb);
                    if curvatures[nb as usize] <= kappa {
                        frontier.push_back(nb);
                    }
                }
            }
        }
        if members.len() >= min_region_size {
            num_regions += 1;
            for &i in &members {
                region_ids[i as usize] = num_regions as u32;
            }
        }
    }

    RegionSegmentation {
        region_ids,
        num_regions,
        theta_deg,
        kappa,
        adapted_iterations: 0,
        flagged: false,
    }
}

/// Grows regions, tightening (x0.7) the constraints while fewer than two
/// regions come out and loosening (x1.3) while more than points/divisor do.
/// After `max_iters` without success, returns the attempt whose region count
/// was closest to two, flagged.
pub fn adapt_and_grow(
    neighbors: &[Vec<u32>],
    normals: &[Point3],
    curvatures: &[f64],
    params: &RegionParams,
) -> RegionSegmentation {
    let n = neighbors.len();
    let cap = (n / params.fragmentation_divisor.max(1)).max(2);
    let mut theta = params.theta_deg;
    let mut kappa = params.kappa;
    let mut best: Option<RegionSegmentation> = None;

    for iter in 0..params.max_iters.max(1) {
        let mut seg =
            grow_regions(neighbors, normals, curvatures, theta, kappa, params.min_region_size);
        seg.adapted_iterations = iter;
        if (2..=cap).contains(&seg.num_regions) {
            return seg;
        }
        let distance = seg.num_regions.abs_diff(2);
        let replace = match &best {
            None => true,
            Some(b) => distance < b.num_regions.abs_diff(2),
        };
        if replace {
            best = Some(seg.clone());
        }
        if seg.num_regions < 2 {
            theta *= 0.7;
            kappa *= 0.7;
        } else {
            theta *= 1.3;
            kappa *= 1.3;
        }
    }

    let mut seg = best.expect("at least one attempt");
    seg.flagged = true;
    seg
}

/// Scan points nearest to the mesh foot points, deduplicated and sorted.
///
/// `feet` are the closest points on the model surface for every section point
/// (M_closest); the result indexes the section points that the mesh "sees"
/// (P_closest).
pub fn mesh_proximal_indices(section_index: &SpatialIndex, feet: &[Point3]) -> Vec<u32> {
    let mut ids: Vec<u32> = feet
        .iter()
        .filter_map(|&foot| section_index.knn(foot, 1).first().map(|&(i, _)| i))
        .collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}

/// Object hull H_obj: convex hull of the mesh-proximal scan points.
pub fn build_h_obj(section: &PointCloud, proximal: &[u32]) -> Result<ConvexHull3> {
    if proximal.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let pts: Vec<Point3> = proximal.iter().map(|&i| section.point(i as usize)).collect();
    convex_hull(&pts)
}

/// Per-point region score: the fraction of the point's region lying inside
/// H_obj, or `None` for unassigned points.
#[derive(Debug, Clone)]
pub struct RegionScoreField(pub Vec<Option<f64>>);

impl RegionScoreField {
    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> Option<f64> {
        self.0[i]
    }
}

pub fn region_score(
    segmentation: &RegionSegmentation,
    section: &PointCloud,
    h_obj: &ConvexHull3,
) -> RegionScoreField {
    let n = section.len();
    debug_assert_eq!(segmentation.region_ids.len(), n);
    let mut totals = alloc::vec![0u32; segmentation.num_regions + 1];
    let mut inside = alloc::vec![0u32; segmentation.num_regions + 1];
    for i in 0..n {
        let r = segmentation.region_ids[i] as usize;
        if r == UNASSIGNED_REGION as usize {
            continue;
        }
        totals[r] += 1;
        if h_obj.contains(section.point(i)) {
            inside[r] += 1;
        }
    }
    let scores = segmentation
        .region_ids
        .iter()
        .map(|&r| {
            if r == UNASSIGNED_REGION {
                None
            } else {
                Some(inside[r as usize] as f64 / totals[r as usize] as f64)
            }
        })
        .collect();
    RegionScoreField(scores)
}
