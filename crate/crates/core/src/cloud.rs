//! Point cloud container with optional per-point attributes.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::Point3;

/// Semantic class id. Id 0 is reserved for the background class.
pub type ClassId = u16;

/// Sentinel for points left unlabeled in the weak scheme (and in ground
/// truth that excludes a point from evaluation).
pub const UNLABELED: ClassId = u16::MAX;

/// An ordered set of scan points with optional unit normals and optional
/// ground-truth class labels.
#[derive(Debug, Clone, Default)]
pub struct PointCloud {
    points: Vec<Point3>,
    normals: Option<Vec<Point3>>,
    gt_labels: Option<Vec<ClassId>>,
}

impl PointCloud {
    /// Builds a cloud from raw points, validating that all coordinates are finite.
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFiniteCoordinate);
        }
        Ok(PointCloud { points, normals: None, gt_labels: None })
    }

    /// Attaches per-point unit normals (each within 1e-6 of unit length).
    pub fn with_normals(mut self, normals: Vec<Point3>) -> Result<Self> {
        if normals.len() != self.points.len() {
            return Err(Error::LengthMismatch { expected: self.points.len(), actual: normals.len() });
        }
        if normals.iter().any(|n| (n.norm() - 1.0).abs() > 1e-6) {
            return Err(Error::InvalidParameter("normals must be unit length"));
        }
        self.normals = Some(normals);
        Ok(self)
    }

    /// Attaches ground-truth class labels.
    pub fn with_gt_labels(mut self, labels: Vec<ClassId>) -> Result<Self> {
        if labels.len() != self.points.len() {
            return Err(Error::LengthMismatch { expected: self.points.len(), actual: labels.len() });
        }
        self.gt_labels = Some(labels);
        Ok(self)
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
    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    #[inline]
    pub fn point(&self, i: usize) -> Point3 {
        self.points[i]
    }

    pub fn normals(&self) -> Option<&[Point3]> {
        self.normals.as_deref()
    }

    pub fn gt_labels(&self) -> Option<&[ClassId]> {
        self.gt_labels.as_deref()
    }

    /// Sub-cloud of the given point indices, carrying attributes along.
    pub fn select(&self, indices: &[u32]) -> PointCloud {
        let pick = |v: &Vec<Point3>| indices.iter().map(|&i| v[i as usize]).collect::<Vec<_>>();
        PointCloud {
            points: pick(&self.points),
            normals: self.normals.as_ref().map(pick),
            gt_labels: self
                .gt_labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i as usize]).collect()),
        }
    }

    /// Axis-aligned bounding box, or `None` for an empty cloud.
    pub fn bounding_box(&self) -> Option<(Point3, Point3)> {
        let first = *self.points.first()?;
        let mut lo = first;
        let mut hi = first;
        for &p in &self.points[1..] {
            lo = lo.min_componentwise(p);
            hi = hi.max_componentwise(p);
        }
        Some((lo, hi))
    }

    /// Centroid of the points; `None` for an empty cloud.
    pub fn centroid(&self) -> Option<Point3> {
        if self.points.is_empty() {
            return None;
        }
        let mut sum = Point3::ZERO;
        for &p in &self.points {
            sum += p;
        }
        Some(sum / self.points.len() as f64)
    }
}
