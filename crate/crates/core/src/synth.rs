//! Synthetic scene generation: primitive objects on planar backgrounds with
//! controllable scan noise, outliers, and CAD misalignment, plus exact
//! ground-truth labels.
//!
//! Ground truth is tied to the true surfaces the points were sampled from;
//! the emitted models carry the perturbed poses, so misalignment degrades
//! labels the same way bad CAD fits do on real scans.

use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cloud::{ClassId, PointCloud};
use crate::error::{Error, Result};
use crate::labeling::ClassRegistry;
use crate::math::{mix_seed, Point3, Pose, Quat};
use crate::mesh::{box_mesh, cylinder_mesh, PosedModel, TriangleMesh};

/// Object primitives with analytic meshes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrimitiveShape {
    /// Axis-aligned box of the given full extents, centered at the origin.
    Box { size: Point3 },
    /// Closed cylinder about +z, centered at the origin.
    Cylinder { radius: f64, height: f64, segments: usize },
    /// L-profile: a horizontal slab with an upright slab along its -y edge,
    /// inside a `size` bounding box with the given arm thickness.
    LShape { size: Point3, thickness: f64 },
}

impl PrimitiveShape {
    pub fn mesh(&self) -> TriangleMesh {
        match *self {
            PrimitiveShape::Box { size } => box_mesh(size),
            PrimitiveShape::Cylinder { radius, height, segments } => {
                cylinder_mesh(radius, height, segments)
            }
            PrimitiveShape::LShape { size, thickness } => {
                let t = thickness.min(size.y * 0.9).min(size.z * 0.9);
                let slab = box_mesh(Point3::new(size.x, size.y, t));
                let upright = box_mesh(Point3::new(size.x, t, size.z - t));
                let mut vertices: Vec<Point3> = slab
                    .vertices()
                    .iter()
                    .map(|&v| v + Point3::new(0.0, 0.0, -size.z / 2.0 + t / 2.0))
                    .collect();
                let offset = vertices.len() as u32;
                vertices.extend(
                    upright
                        .vertices()
                        .iter()
                        .map(|&v| v + Point3::new(0.0, -size.y / 2.0 + t / 2.0, t / 2.0)),
                );
                let mut triangles = slab.triangles().to_vec();
                triangles.extend(
                    upright.triangles().iter().map(|t| [t[0] + offset, t[1] + offset, t[2] + offset]),
                );
                TriangleMesh::new(vertices, triangles).expect("l-shape mesh is valid")
            }
        }
    }
}

/// One object of interest: shape, class, and its true pose in the scene.
#[derive(Debug, Clone)]
pub struct ObjectSpec {
    pub shape: PrimitiveShape,
    pub category: String,
    pub pose: Pose,
}

/// A background rectangle (floor or wall patch): center plus two full edge
/// vectors.
#[derive(Debug, Clone, Copy)]
pub struct RectSpec {
    pub center: Point3,
    pub edge_u: Point3,
    pub edge_v: Point3,
}

impl RectSpec {
    fn mesh(&self) -> TriangleMesh {
        let a = self.center - self.edge_u * 0.5 - self.edge_v * 0.5;
        let b = a + self.edge_u;
        let c = b + self.edge_v;
        let d = a + self.edge_v;
        TriangleMesh::new(alloc::vec![a, b, c, d], alloc::vec![[0, 1, 2], [0, 2, 3]])
            .expect("rect mesh is valid")
    }
}

/// Pose perturbation applied to the emitted models.
#[derive(Debug, Clone, Copy, Default)]
pub struct Misalignment {
    /// Per-axis translation noise, meters.
    pub sigma_t: f64,
    /// Rotation noise about a random axis, degrees.
    pub sigma_r_deg: f64,
    /// Per-axis multiplicative scale noise.
    pub sigma_s: f64,
}

#[derive(Debug, Clone)]
pub struct SceneSpec {
    pub objects: Vec<ObjectSpec>,
    pub background: Vec<RectSpec>,
    /// Surface sampling density, points per square meter.
    pub density: f64,
    /// Isotropic Gaussian scan noise, meters.
    pub noise_sigma: f64,
    /// Outliers added as a fraction of the surface point count, uniform in
    /// the inflated scene box, labeled background.
    pub outlier_fraction: f64,
    /// Occlusion shadow at contacts: background points closer than this to a
    /// true object surface are dropped, as are object points closer than this
    /// to a background surface (a scanner sees neither). 0 disables carving.
    pub occlusion_clearance: f64,
    pub misalignment: Misalignment,
    pub seed: u64,
}

/// A generated scene: a cloud with exact ground truth, the (possibly
/// misaligned) models to label against, and the class registry.
#[derive(Debug, Clone)]
pub struct GeneratedScene {
    pub cloud: PointCloud,
    pub models: Vec<PosedModel>,
    pub registry: ClassRegistry,
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
}

fn sample_surface_points(
    mesh: &TriangleMesh,
    density: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<Vec<Point3>> {
    let count = libm::round(mesh.total_area() * density) as usize;
    if count == 0 {
        return Ok(Vec::new());
    }
    let mut points = mesh.sample_surface(count, seed)?;
    if noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0xA0));
        for p in &mut points {
            *p += Point3::new(gaussian(&mut rng), gaussian(&mut rng), gaussian(&mut rng))
                * noise_sigma;
        }
    }
    Ok(points)
}

fn perturb_pose(pose: &Pose, mis: &Misalignment, rng: &mut ChaCha8Rng) -> Pose {
    let translation = pose.translation
        + Point3::new(gaussian(rng), gaussian(rng), gaussian(rng)) * mis.sigma_t;
    let axis = loop {
        let a = Point3::new(gaussian(rng), gaussian(rng), gaussian(rng));
        if let Some(u) = a.normalized() {
            break u;
        }
    };
    let angle = gaussian(rng) * mis.sigma_r_deg.to_radians();
    let rotation = Quat::from_axis_angle(axis, angle).mul(pose.rotation).normalized();
    let scale = Point3::new(
        (pose.scale.x * (1.0 + gaussian(rng) * mis.sigma_s)).max(0.01),
        (pose.scale.y * (1.0 + gaussian(rng) * mis.sigma_s)).max(0.01),
        (pose.scale.z * (1.0 + gaussian(rng) * mis.sigma_s)).max(0.01),
    );
    Pose::new(translation, rotation, scale)
}

/// Generates (cloud with gt labels, posed models, registry); deterministic
/// for a fixed spec.
pub fn generate_scene(spec: &SceneSpec) -> Result<GeneratedScene> {
    if !(spec.density > 0.0) {
        return Err(Error::InvalidParameter("density must be positive"));
    }
    if spec.noise_sigma < 0.0 || spec.misalignment.sigma_t < 0.0 {
        return Err(Error::InvalidParameter("noise levels must be non-negative"));
    }
    if !(0.0..0.5).contains(&spec.outlier_fraction) {
        return Err(Error::InvalidParameter("outlier fraction must be in [0, 0.5)"));
    }
    if spec.objects.is_empty() {
        return Err(Error::InvalidParameter("scene needs at least one object"));
    }

    if spec.occlusion_clearance < 0.0 {
        return Err(Error::InvalidParameter("occlusion clearance must be non-negative"));
    }

    let registry = ClassRegistry::from_categories(spec.objects.iter().map(|o| o.category.as_str()))?;

    // occlusion carving queries over the true (unperturbed) surfaces
    let carve = spec.occlusion_clearance;
    let object_queries: Vec<crate::bvh::MeshDistanceQuery> = if carve > 0.0 {
        spec.objects
            .iter()
            .map(|o| crate::bvh::MeshDistanceQuery::from_mesh(&o.shape.mesh().transformed(&o.pose)))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let background_queries: Vec<crate::bvh::MeshDistanceQuery> = if carve > 0.0 {
        spec.background
            .iter()
            .map(|r| crate::bvh::MeshDistanceQuery::from_mesh(&r.mesh()))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    let mut points: Vec<Point3> = Vec::new();
    let mut gt: Vec<ClassId> = Vec::new();

    for (i, object) in spec.objects.iter().enumerate() {
        let true_world = object.shape.mesh().transformed(&object.pose);
        let mut sampled = sample_surface_points(
            &true_world,
            spec.density,
            spec.noise_sigma,
            mix_seed(spec.seed, 100 + i as u64),
        )?;
        if carve > 0.0 {
            sampled.retain(|&p| background_queries.iter().all(|q| q.distance(p) >= carve));
        }
        let class = registry.resolve(&object.category)?;
        gt.extend(core::iter::repeat(class).take(sampled.len()));
        points.extend(sampled);
    }
    for (i, rect) in spec.background.iter().enumerate() {
        let mut sampled = sample_surface_points(
            &rect.mesh(),
            spec.density,
            spec.noise_sigma,
            mix_seed(spec.seed, 500 + i as u64),
        )?;
        if carve > 0.0 {
            sampled.retain(|&p| object_queries.iter().all(|q| q.distance(p) >= carve));
        }
        gt.extend(core::iter::repeat(crate::labeling::BACKGROUND_CLASS).take(sampled.len()));
        points.extend(sampled);
    }

    if points.is_empty() {
        return Err(Error::EmptyScene);
    }

    if spec.outlier_fraction > 0.0 {
        let n_out = libm::round(points.len() as f64 * spec.outlier_fraction) as usize;
        let mut lo = points[0];
        let mut hi = points[0];
        for &p in &points {
            lo = lo.min_componentwise(p);
            hi = hi.max_componentwise(p);
        }
        let margin = (hi - lo) * 0.05 + Point3::splat(0.05);
        let (lo, hi) = (lo - margin, hi + margin);
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(spec.seed, 7));
        for _ in 0..n_out {
            points.push(Point3::new(
                rng.gen_range(lo.x..hi.x),
                rng.gen_range(lo.y..hi.y),
                rng.gen_range(lo.z..hi.z),
            ));
            gt.push(crate::labeling::BACKGROUND_CLASS);
        }
    }

    let mut models = Vec::with_capacity(spec.objects.len());
    for (i, object) in spec.objects.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(spec.seed, 200 + i as u64));
        let pose = perturb_pose(&object.pose, &spec.misalignment, &mut rng);
        models.push(PosedModel::new(object.shape.mesh(), pose, object.category.clone())?);
    }

    let cloud = PointCloud::new(points)?.with_gt_labels(gt)?;
    Ok(GeneratedScene { cloud, models, registry })
}
