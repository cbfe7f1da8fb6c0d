//! Triangle meshes and posed CAD models.

use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math::{Point3, Pose};

/// Triangles with area at or below this are dropped by `clean`.
pub const DEGENERATE_AREA: f64 = 1e-12;

/// An indexed triangle mesh.
#[derive(Debug, Clone, Default)]
pub struct TriangleMesh {
    vertices: Vec<Point3>,
    triangles: Vec<[u32; 3]>,
}

impl TriangleMesh {
    /// Validates indices and coordinates, then drops degenerate triangles
    /// (area <= 1e-12 m^2).
    pub fn new(vertices: Vec<Point3>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteCoordinate);
        }
        for (t, tri) in triangles.iter().enumerate() {
            for &i in tri {
                if i as usize >= vertices.len() {
                    return Err(Error::InvalidTriangleIndex {
                        triangle: t,
                        index: i,
                        vertex_count: vertices.len(),
                    });
                }
            }
        }
        let mut mesh = TriangleMesh { vertices, triangles };
        mesh.triangles.retain(|tri| {
            triangle_area(
                mesh.vertices[tri[0] as usize],
                mesh.vertices[tri[1] as usize],
                mesh.vertices[tri[2] as usize],
            ) > DEGENERATE_AREA
        });
        Ok(mesh)
    }

    #[inline]
    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    #[inline]
    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    #[inline]
    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Corner positions of triangle `t`.
    #[inline]
    pub fn triangle(&self, t: usize) -> [Point3; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a as usize], self.vertices[b as usize], self.vertices[c as usize]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle(t);
        triangle_area(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// `n` points sampled uniformly by area from the surface; deterministic
    /// for a fixed seed.
    pub fn sample_surface(&self, n: usize, seed: u64) -> Result<Vec<Point3>> {
        if n == 0 {
            return Err(Error::InvalidParameter("sample count must be >= 1"));
        }
        if self.triangles.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let mut cumulative = Vec::with_capacity(self.triangles.len());
        let mut total = 0.0;
        for t in 0..self.triangles.len() {
            total += self.triangle_area(t);
            cumulative.push(total);
        }
        if total <= 0.0 {
            return Err(Error::ZeroSurfaceArea);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let target = rng.gen::<f64>() * total;
            let t = cumulative.partition_point(|&c| c <= target).min(self.triangles.len() - 1);
            let [a, b, c] = self.triangle(t);
            // sqrt trick gives a uniform barycentric sample
            let r1 = libm::sqrt(rng.gen::<f64>());
            let r2 = rng.gen::<f64>();
            out.push(a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2));
        }
        Ok(out)
    }

    /// Mesh with `pose` applied to every vertex.
    pub fn transformed(&self, pose: &Pose) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.iter().map(|&v| pose.apply(v)).collect(),
            triangles: self.triangles.clone(),
        }
    }
}

pub fn triangle_area(a: Point3, b: Point3, c: Point3) -> f64 {
    0.5 * (b - a).cross(c - a).norm()
}

/// A CAD mesh with its 9-DoF pose (translation, unit quaternion rotation,
/// per-axis scale) and semantic category.
#[derive(Debug, Clone)]
pub struct PosedModel {
    pub mesh: TriangleMesh,
    pub pose: Pose,
    pub category: String,
}

impl PosedModel {
    pub fn new(mesh: TriangleMesh, pose: Pose, category: String) -> Result<Self> {
        if (pose.rotation.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter("rotation quaternion must be unit length"));
        }
        if pose.scale.x <= 0.0 || pose.scale.y <= 0.0 || pose.scale.z <= 0.0 {
            return Err(Error::InvalidParameter("scale factors must be positive"));
        }
        if category.is_empty() {
            return Err(Error::InvalidParameter("category must be non-empty"));
        }
        Ok(PosedModel { mesh, pose, category })
    }

    /// The mesh in world frame (pose applied to every vertex).
    pub fn world_mesh(&self) -> TriangleMesh {
        self.mesh.transformed(&self.pose)
    }
}

/// Uniform surface samples from the posed (world-frame) model surface.
pub fn sample_mesh_surface(model: &PosedModel, n: usize, seed: u64) -> Result<Vec<Point3>> {
    model.world_mesh().sample_surface(n, seed)
}

/// Axis-aligned box mesh centered at the origin (12 triangles).
pub fn box_mesh(size: Point3) -> TriangleMesh {
    let h = size * 0.5;
    let v = |sx: f64, sy: f64, sz: f64| Point3::new(sx * h.x, sy * h.y, sz * h.z);
    let vertices = alloc::vec![
        v(-1.0, -1.0, -1.0),
        v(1.0, -1.0, -1.0),
        v(1.0, 1.0, -1.0),
        v(-1.0, 1.0, -1.0),
        v(-1.0, -1.0, 1.0),
        v(1.0, -1.0, 1.0),
        v(1.0, 1.0, 1.0),
        v(-1.0, 1.0, 1.0),
    ];
    let triangles = alloc::vec![
        [0, 2, 1],
        [0, 3, 2], // bottom (-z)
        [4, 5, 6],
        [4, 6, 7], // top (+z)
        [0, 1, 5],
        [0, 5, 4], // -y
        [2, 3, 7],
        [2, 7, 6], // +y
        [0, 4, 7],
        [0, 7, 3], // -x
        [1, 2, 6],
        [1, 6, 5], // +x
    ];
    TriangleMesh::new(vertices, triangles).expect("box mesh is valid")
}

/// Closed cylinder of the given radius/height about +z, centered at the origin.
pub fn cylinder_mesh(radius: f64, height: f64, segments: usize) -> TriangleMesh {
    let segments = segments.max(3);
    let h = height * 0.5;
    let mut vertices = Vec::with_capacity(2 * segments + 2);
    for ring in [-h, h] {
        for s in 0..segments {
            let angle = core::f64::consts::TAU * s as f64 / segments as f64;
            vertices.push(Point3::new(radius * libm::cos(angle), radius * libm::sin(angle), ring));
        }
    }
    let bottom_center = vertices.len() as u32;
    vertices.push(Point3::new(0.0, 0.0, -h));
    let top_center = vertices.len() as u32;
    vertices.push(Point3::new(0.0, 0.0, h));

    let mut triangles = Vec::with_capacity(4 * segments);
    let n = segments as u32;
    for s in 0..n {
        let s1 = (s + 1) % n;
        // side quad
        triangles.push([s, s1, n + s]);
        triangles.push([s1, n + s1, n + s]);
        // caps
        triangles.push([bottom_center, s1, s]);
        triangles.push([top_center, n + s, n + s1]);
    }
    TriangleMesh::new(vertices, triangles).expect("cylinder mesh is valid")
}
