//! Splits the scan into one section per model by nearest-model distance.

use alloc::vec::Vec;

use crate::bvh::MeshDistanceQuery;
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::math::Point3;

/// Per-point section assignment. Section ids are 1-based (section m holds the
/// points nearest to model m); `distances` and `feet` record the closest-point
/// query against the assigned model.
#[derive(Debug, Clone)]
pub struct SectionAssignment {
    pub section_ids: Vec<u32>,
    pub distances: Vec<f64>,
    pub feet: Vec<Point3>,
    pub num_models: usize,
}

/// Nearest model for a single point: (1-based section id, distance, foot point).
///
/// Ties on distance go to the lowest model index so labels are reproducible.
pub fn assign_point(p: Point3, queries: &[MeshDistanceQuery]) -> (u32, f64, Point3) {
    let mut best_id = 1u32;
    let mut best_dist = f64::INFINITY;
    let mut best_foot = Point3::ZERO;
    for (m, q) in queries.iter().enumerate() {
        let hit = q.closest(p);
        if hit.distance < best_dist {
            best_dist = hit.distance;
            best_foot = hit.point;
            best_id = m as u32 + 1;
        }
    }
    (best_id, best_dist, best_foot)
}

/// Assigns every point to the model with minimum unsigned surface distance.
pub fn split_into_sections(
    cloud: &PointCloud,
    queries: &[MeshDistanceQuery],
) -> Result<SectionAssignment> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if queries.is_empty() {
        return Err(Error::InvalidParameter("at least one model is required"));
    }
    let mut section_ids = Vec::with_capacity(cloud.len());
    let mut distances = Vec::with_capacity(cloud.len());
    let mut feet = Vec::with_capacity(cloud.len());
    for &p in cloud.points() {
        let (id, d, foot) = assign_point(p, queries);
        section_ids.push(id);
        distances.push(d);
        feet.push(foot);
    }
    Ok(SectionAssignment { section_ids, distances, feet, num_models: queries.len() })
}

/// Builds an assignment from per-point results computed elsewhere (used by the
/// parallel orchestrator; semantics identical to `split_into_sections`).
pub fn assemble_assignment(
    per_point: Vec<(u32, f64, Point3)>,
    num_models: usize,
) -> SectionAssignment {
    let mut section_ids = Vec::with_capacity(per_point.len());
    let mut distances = Vec::with_capacity(per_point.len());
    let mut feet = Vec::with_capacity(per_point.len());
    for (id, d, foot) in per_point {
        section_ids.push(id);
        distances.push(d);
        feet.push(foot);
    }
    SectionAssignment { section_ids, distances, feet, num_models }
}

/// One section: the sub-cloud assigned to a model, with enough context to
/// scatter per-point results back into the original cloud.
#[derive(Debug, Clone)]
pub struct Section {
    pub cloud: PointCloud,
    /// Index into the original cloud for every section point.
    pub original_indices: Vec<u32>,
    /// 0-based model index this section belongs to.
    pub model_index: usize,
    /// Distance to the assigned model, per section point.
    pub distances: Vec<f64>,
    /// Closest point on the assigned model, per section point.
    pub feet: Vec<Point3>,
}

impl Section {
    #[inline]
    pub fn len(&self) -> usize {
        self.cloud.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.cloud.is_empty()
    }
}

/// Extracts section `m` (1-based). Empty sections are legal; downstream
/// stages skip them.
pub fn extract_section(
    cloud: &PointCloud,
    assignment: &SectionAssignment,
    m: usize,
) -> Result<Section> {
    if m == 0 || m > assignment.num_models {
        return Err(Error::IndexOutOfRange { index: m, count: assignment.num_models });
    }
    if assignment.section_ids.len() != cloud.len() {
        return Err(Error::LengthMismatch {
            expected: cloud.len(),
            actual: assignment.section_ids.len(),
        });
    }
    let original_indices: Vec<u32> = assignment
        .section_ids
        .iter()
        .enumerate()
        .filter(|&(_, &id)| id as usize == m)
        .map(|(i, _)| i as u32)
        .collect();
    let distances = original_indices.iter().map(|&i| assignment.distances[i as usize]).collect();
    let feet = original_indices.iter().map(|&i| assignment.feet[i as usize]).collect();
    Ok(Section {
        cloud: cloud.select(&original_indices),
        original_indices,
        model_index: m - 1,
        distances,
        feet,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{Point3, Pose};
    use crate::mesh::{box_mesh, PosedModel};
    use alloc::string::String;
    use alloc::vec;

    fn cube_at(x: f64) -> MeshDistanceQuery {
        let model = PosedModel::new(
            box_mesh(Point3::splat(1.0)),
            Pose::translate(Point3::new(x, 0.0, 0.0)),
            String::from("cube"),
        )
        .unwrap();
        MeshDistanceQuery::new(&model).unwrap()
    }

    #[test]
    fn single_model_gets_all_points() {
        let cloud = PointCloud::new(vec![
            Point3::ZERO,
            Point3::new(3.0, 1.0, 0.0),
            Point3::new(-2.0, 0.0, 5.0),
        ])
        .unwrap();
        let assignment = split_into_sections(&cloud, &[cube_at(0.0)]).unwrap();
        assert!(assignment.section_ids.iter().all(|&s| s == 1));
    }

    #[test]
    fn points_go_to_nearest_cube() {
        let cloud =
            PointCloud::new(vec![Point3::new(1.0, 0.0, 0.0), Point3::new(9.0, 0.0, 0.0)]).unwrap();
        let queries = [cube_at(0.0), cube_at(10.0)];
        let assignment = split_into_sections(&cloud, &queries).unwrap();
        assert_eq!(assignment.section_ids, vec![1, 2]);
        assert!((assignment.distances[0] - 0.5).abs() < 1e-12);
        assert!((assignment.distances[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn equidistant_point_breaks_tie_to_lower_index() {
        let cloud = PointCloud::new(vec![Point3::new(5.0, 0.0, 0.0)]).unwrap();
        let queries = [cube_at(0.0), cube_at(10.0)];
        let assignment = split_into_sections(&cloud, &queries).unwrap();
        assert_eq!(assignment.section_ids, vec![1]);
    }

    #[test]
    fn sections_partition_the_cloud() {
        let mut pts = Vec::new();
        for i in 0..40 {
            pts.push(Point3::new(i as f64 * 0.3, 0.2, 0.1));
        }
        let cloud = PointCloud::new(pts).unwrap();
        let queries = [cube_at(0.0), cube_at(6.0), cube_at(12.0)];
        let assignment = split_into_sections(&cloud, &queries).unwrap();
        let mut seen = vec![false; cloud.len()];
        let mut total = 0;
        for m in 1..=3 {
            let section = extract_section(&cloud, &assignment, m).unwrap();
            total += section.len();
            for &i in &section.original_indices {
                assert!(!seen[i as usize], "point {i} in two sections");
                seen[i as usize] = true;
            }
            // stored distance equals a fresh closest-point query
            for (j, &i) in section.original_indices.iter().enumerate() {
                let d = queries[m - 1].distance(cloud.point(i as usize));
                assert!((d - section.distances[j]).abs() < 1e-12);
            }
        }
        assert_eq!(total, cloud.len());
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn assigned_distance_is_minimal() {
        let cloud = PointCloud::new(vec![
            Point3::new(2.0, 1.5, -0.3),
            Point3::new(7.3, -0.2, 0.4),
            Point3::new(4.9, 2.0, 0.0),
        ])
        .unwrap();
        let queries = [cube_at(0.0), cube_at(10.0)];
        let assignment = split_into_sections(&cloud, &queries).unwrap();
        for (i, &p) in cloud.points().iter().enumerate() {
            for q in &queries {
                assert!(assignment.distances[i] <= q.distance(p) + 1e-12);
            }
        }
    }

    #[test]
    fn extracting_empty_section_is_allowed() {
        let cloud = PointCloud::new(vec![Point3::ZERO]).unwrap();
        let assignment = split_into_sections(&cloud, &[cube_at(0.0), cube_at(50.0)]).unwrap();
        let empty = extract_section(&cloud, &assignment, 2).unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn out_of_range_section_is_an_error() {
        let cloud = PointCloud::new(vec![Point3::ZERO]).unwrap();
        let assignment = split_into_sections(&cloud, &[cube_at(0.0)]).unwrap();
        assert!(extract_section(&cloud, &assignment, 0).is_err());
        assert!(extract_section(&cloud, &assignment, 2).is_err());
    }
}
