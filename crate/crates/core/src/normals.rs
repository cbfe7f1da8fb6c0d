//! Per-point normal and curvature estimation from local plane fits.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::kdtree::SpatialIndex;
use crate::math::{symmetric_eigen3, Point3};

/// Normals (unit, locally consistent orientation) and curvatures
/// (surface variation lambda0 / (lambda0+lambda1+lambda2), in [0, 1/3]).
#[derive(Debug, Clone)]
pub struct SurfaceEstimate {
    pub normals: Vec<Point3>,
    pub curvatures: Vec<f64>,
}

/// Fits a plane over each point's `k` nearest neighbors (the point itself
/// included) and takes the smallest covariance eigenvector as the normal.
/// Normal signs are made locally consistent by propagation over the
/// neighbor graph, starting from the lowest-index point of each component.
pub fn estimate_normals_and_curvature(cloud: &PointCloud, k: usize) -> Result<SurfaceEstimate> {
    if k < 3 {
        return Err(Error::InvalidParameter("neighbor count k must be >= 3"));
    }
    let n = cloud.len();
    if n < 3 {
        return Err(Error::InvalidParameter("need at least 3 points to fit normals"));
    }
    let index = SpatialIndex::new(cloud)?;
    let k_eff = k.min(n);

    let mut normals = Vec::with_capacity(n);
    let mut curvatures = Vec::with_capacity(n);
    let mut neighbor_lists: Vec<Vec<u32>> = Vec::with_capacity(n);

    for i in 0..n {
        let nn = index.knn(cloud.point(i), k_eff);
        let mut mean = Point3::ZERO;
        for &(j, _) in &nn {
            mean += cloud.point(j as usize);
        }
        mean = mean / nn.len() as f64;
        let (mut xx, mut xy, mut xz, mut yy, mut yz, mut zz) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for &(j, _) in &nn {
            let d = cloud.point(j as usize) - mean;
            xx += d.x * d.x;
            xy += d.x * d.y;
            xz += d.x * d.z;
            yy += d.y * d.y;
            yz += d.y * d.z;
            zz += d.z * d.z;
        }
        let (vals, vecs) = symmetric_eigen3(xx, xy, xz, yy, yz, zz);
        let total = vals[0] + vals[1] + vals[2];
        let curvature = if total > 0.0 { (vals[0] / total).max(0.0) } else { 0.0 };
        let normal = vecs[0].normalized().unwrap_or(Point3::new(0.0, 0.0, 1.0));
        normals.push(normal);
        curvatures.push(curvature);
        neighbor_lists.push(nn.into_iter().map(|(j, _)| j).filter(|&j| j as usize != i).collect());
    }

    // undirected adjacency for sign propagation
    let mut adjacency: Vec<Vec<u32>> = alloc::vec![Vec::new(); n];
    for (i, list) in neighbor_lists.iter().enumerate() {
        for &j in list {
            adjacency[i].push(j);
            adjacency[j as usize].push(i as u32);
        }
    }

    let mut visited = alloc::vec![false; n];
    let mut queue = VecDeque::new();
    for root in 0..n {
        if visited[root] {
            continue;
        }
        // canonical root sign: largest-magnitude component positive
        let axis = normals[root].largest_axis();
        if normals[root].axis(axis) < 0.0 {
            normals[root] = -normals[root];
        }
        visited[root] = true;
        queue.push_back(root as u32);
        while let Some(i) = queue.pop_front() {
            let reference = normals[i as usize];
            for &j in &adjacency[i as usize] {
                if !visited[j as usize] {
                    visited[j as usize] = true;
                    if reference.dot(normals[j as usize]) < 0.0 {
                        normals[j as usize] = -normals[j as usize];
                    }
                    queue.push_back(j);
                }
            }
        }
    }

    Ok(SurfaceEstimate { normals, curvatures })
}
