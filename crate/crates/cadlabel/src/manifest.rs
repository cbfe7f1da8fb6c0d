//! Scene manifests: one TOML file binding a point cloud to its posed CAD
//! models and categories, plus the scene-bundle writer used by `synth`.
//!
//! ```toml
//! cloud = "cloud.ply"
//! gt_labels = "cloud.ply"            # optional; file carrying a "label" property
//! classes = ["background", "crate"]  # optional registry override
//!
//! [[models]]
//! mesh = "models/00_crate.obj"
//! category = "crate"
//! translation = [0.0, 0.0, 0.25]
//! rotation = [1.0, 0.0, 0.0, 0.0]    # unit quaternion, w x y z
//! scale = [1.0, 1.0, 1.0]
//! ```
//!
//! Paths are relative to the manifest file. Quaternions must be within 1e-6
//! of unit length and are renormalized on load.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use cadlabel_core::cloud::PointCloud;
use cadlabel_core::labeling::ClassRegistry;
use cadlabel_core::math::{Point3, Pose, Quat};
use cadlabel_core::mesh::PosedModel;
use cadlabel_core::synth::GeneratedScene;

use crate::obj;
use crate::ply;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestFile {
    pub cloud: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_labels: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<Vec<String>>,
    pub models: Vec<ModelEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelEntry {
    pub mesh: String,
    pub category: String,
    #[serde(default = "zero3")]
    pub translation: [f64; 3],
    #[serde(default = "identity_quat")]
    pub rotation: [f64; 4],
    #[serde(default = "one3")]
    pub scale: [f64; 3],
}

fn zero3() -> [f64; 3] {
    [0.0; 3]
}

fn one3() -> [f64; 3] {
    [1.0; 3]
}

fn identity_quat() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

/// A loaded scene, ready for the pipeline.
#[derive(Debug)]
pub struct Scene {
    pub cloud: PointCloud,
    pub models: Vec<PosedModel>,
    pub registry: ClassRegistry,
}

pub fn load_manifest(path: &Path) -> Result<ManifestFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
}

/// Loads the cloud, poses the models, and builds the registry (categories in
/// order of first appearance unless `classes` overrides it).
pub fn load_scene(manifest_path: &Path) -> Result<Scene> {
    let manifest = load_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    if manifest.models.is_empty() {
        bail!("{}: manifest lists no models", manifest_path.display());
    }

    let cloud_path = base.join(&manifest.cloud);
    let file = ply::read_cloud_ply(&cloud_path)?;
    let mut cloud = PointCloud::new(file.points)
        .map_err(|e| anyhow!("{}: {e}", cloud_path.display()))?;
    if let Some(normals) = file.normals {
        // tolerate unnormalized stored normals by renormalizing
        let fixed: Vec<Point3> = normals
            .iter()
            .map(|n| n.normalized().ok_or_else(|| anyhow!("{}: zero normal", cloud_path.display())))
            .collect::<Result<_>>()?;
        cloud = cloud.with_normals(fixed).map_err(|e| anyhow!("{}: {e}", cloud_path.display()))?;
    }

    let gt = match &manifest.gt_labels {
        Some(rel) => {
            let gt_path = base.join(rel);
            let gt_file = if gt_path == cloud_path {
                file.labels.clone()
            } else {
                ply::read_cloud_ply(&gt_path)?.labels
            };
            Some(gt_file.ok_or_else(|| {
                anyhow!("{}: ground-truth file has no \"label\" property", gt_path.display())
            })?)
        }
        None => file.labels,
    };
    if let Some(gt) = gt {
        cloud = cloud
            .with_gt_labels(gt)
            .map_err(|e| anyhow!("{}: ground-truth labels: {e}", manifest_path.display()))?;
    }

    let registry = match &manifest.classes {
        Some(names) => ClassRegistry::from_names(names.clone())
            .map_err(|e| anyhow!("{}: classes override: {e}", manifest_path.display()))?,
        None => {
            ClassRegistry::from_categories(manifest.models.iter().map(|m| m.category.as_str()))
                .map_err(|e| anyhow!("{}: {e}", manifest_path.display()))?
        }
    };

    let mut models = Vec::with_capacity(manifest.models.len());
    for (i, entry) in manifest.models.iter().enumerate() {
        registry
            .resolve(&entry.category)
            .map_err(|e| anyhow!("{}: model {i}: {e}", manifest_path.display()))?;
        let mesh_path = base.join(&entry.mesh);
        let mesh = obj::read_mesh(&mesh_path)?;
        let [w, x, y, z] = entry.rotation;
        let quat = Quat::new(w, x, y, z);
        let norm = quat.norm();
        if (norm - 1.0).abs() > 1e-6 {
            bail!(
                "{}: model {i} rotation has norm {norm:.8}, more than 1e-6 from unit",
                manifest_path.display()
            );
        }
        let pose = Pose::new(
            Point3::new(entry.translation[0], entry.translation[1], entry.translation[2]),
            quat.normalized(),
            Point3::new(entry.scale[0], entry.scale[1], entry.scale[2]),
        );
        let model = PosedModel::new(mesh, pose, entry.category.clone())
            .map_err(|e| anyhow!("{}: model {i} ({}): {e}", manifest_path.display(), entry.category))?;
        models.push(model);
    }

    Ok(Scene { cloud, models, registry })
}

/// Writes a generated scene as a self-contained bundle:
/// cloud.ply (with gt labels), models/NN_category.obj, classes.txt, and
/// manifest.toml. Returns the manifest path.
pub fn write_scene_bundle(dir: &Path, scene: &GeneratedScene) -> Result<PathBuf> {
    fs::create_dir_all(dir.join("models"))
        .with_context(|| format!("creating {}", dir.display()))?;

    let cloud_rel = "cloud.ply";
    ply::write_cloud_ply(
        &dir.join(cloud_rel),
        scene.cloud.points(),
        &ply::CloudColumns { labels: scene.cloud.gt_labels(), ..Default::default() },
    )?;

    let mut entries = Vec::with_capacity(scene.models.len());
    for (i, model) in scene.models.iter().enumerate() {
        let rel = format!("models/{i:02}_{}.obj", sanitize(&model.category));
        obj::write_mesh_obj(&dir.join(&rel), &model.mesh)?;
        entries.push(ModelEntry {
            mesh: rel,
            category: model.category.clone(),
            translation: [
                model.pose.translation.x,
                model.pose.translation.y,
                model.pose.translation.z,
            ],
            rotation: [
                model.pose.rotation.w,
                model.pose.rotation.x,
                model.pose.rotation.y,
                model.pose.rotation.z,
            ],
            scale: [model.pose.scale.x, model.pose.scale.y, model.pose.scale.z],
        });
    }

    crate::labels_io::write_classes_txt(&dir.join("classes.txt"), &scene.registry)?;

    let manifest = ManifestFile {
        cloud: cloud_rel.to_string(),
        gt_labels: Some(cloud_rel.to_string()),
        classes: Some(scene.registry.names().to_vec()),
        models: entries,
    };
    let manifest_path = dir.join("manifest.toml");
    fs::write(&manifest_path, toml::to_string_pretty(&manifest)?)
        .with_context(|| format!("writing {}", manifest_path.display()))?;
    Ok(manifest_path)
}

fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use cadlabel_core::mesh::box_mesh;
    use cadlabel_core::synth::{
        generate_scene, Misalignment, ObjectSpec, PrimitiveShape, RectSpec, SceneSpec,
    };

    fn demo_scene() -> GeneratedScene {
        generate_scene(&SceneSpec {
            objects: vec![
                ObjectSpec {
                    shape: PrimitiveShape::Box { size: Point3::new(0.4, 0.3, 0.3) },
                    category: "crate".into(),
                    pose: Pose::translate(Point3::new(0.5, 0.0, 0.15)),
                },
                ObjectSpec {
                    shape: PrimitiveShape::Cylinder { radius: 0.15, height: 0.4, segments: 16 },
                    category: "drum".into(),
                    pose: Pose::translate(Point3::new(-0.5, 0.0, 0.2)),
                },
            ],
            background: vec![RectSpec {
                center: Point3::ZERO,
                edge_u: Point3::new(3.0, 0.0, 0.0),
                edge_v: Point3::new(0.0, 3.0, 0.0),
            }],
            density: 300.0,
            noise_sigma: 0.001,
            outlier_fraction: 0.01,
            occlusion_clearance: 0.0,
            misalignment: Misalignment::default(),
            seed: 11,
        })
        .unwrap()
    }

    #[test]
    fn bundle_round_trip_preserves_coordinates_and_poses() {
        let dir = tempfile::tempdir().unwrap();
        let scene = demo_scene();
        let manifest = write_scene_bundle(dir.path(), &scene).unwrap();
        let loaded = load_scene(&manifest).unwrap();
        assert_eq!(loaded.cloud.points(), scene.cloud.points());
        assert_eq!(loaded.cloud.gt_labels(), scene.cloud.gt_labels());
        assert_eq!(loaded.models.len(), 2);
        for (a, b) in loaded.models.iter().zip(&scene.models) {
            assert_eq!(a.category, b.category);
            assert_eq!(a.pose, b.pose);
            assert_eq!(a.mesh.vertices(), b.mesh.vertices());
        }
        assert_eq!(loaded.registry.names(), scene.registry.names());
    }

    #[test]
    fn scan2cad_style_pose_matches_manual_composition() {
        // t, q, s entry must reproduce T * R * S applied by hand
        let dir = tempfile::tempdir().unwrap();
        let mesh = box_mesh(Point3::new(1.0, 1.0, 1.0));
        obj::write_mesh_obj(&dir.path().join("m.obj"), &mesh).unwrap();
        ply::write_cloud_ply(
            &dir.path().join("c.ply"),
            &[Point3::ZERO],
            &Default::default(),
        )
        .unwrap();
        let half = core::f64::consts::FRAC_1_SQRT_2;
        fs::write(
            dir.path().join("manifest.toml"),
            format!(
                "cloud = \"c.ply\"\n[[models]]\nmesh = \"m.obj\"\ncategory = \"part\"\n\
                 translation = [1.0, 2.0, 3.0]\nrotation = [{half}, 0.0, 0.0, {half}]\n\
                 scale = [2.0, 1.0, 0.5]\n"
            ),
        )
        .unwrap();
        let scene = load_scene(&dir.path().join("manifest.toml")).unwrap();
        let world = scene.models[0].world_mesh();
        for (i, &v) in mesh.vertices().iter().enumerate() {
            // scale, then rotate 90 deg about z, then translate
            let s = Point3::new(2.0 * v.x, v.y, 0.5 * v.z);
            let r = Point3::new(-s.y, s.x, s.z);
            let expect = r + Point3::new(1.0, 2.0, 3.0);
            assert!(world.vertices()[i].dist(expect) < 1e-9);
        }
    }

    #[test]
    fn unnormalized_quaternion_is_rejected_with_context() {
        let dir = tempfile::tempdir().unwrap();
        obj::write_mesh_obj(&dir.path().join("m.obj"), &box_mesh(Point3::splat(1.0))).unwrap();
        ply::write_cloud_ply(&dir.path().join("c.ply"), &[Point3::ZERO], &Default::default())
            .unwrap();
        fs::write(
            dir.path().join("manifest.toml"),
            "cloud = \"c.ply\"\n[[models]]\nmesh = \"m.obj\"\ncategory = \"part\"\nrotation = [0.707, 0.0, 0.0, 0.707]\n",
        )
        .unwrap();
        let err = load_scene(&dir.path().join("manifest.toml")).unwrap_err().to_string();
        assert!(err.contains("rotation has norm"), "{err}");
    }

    #[test]
    fn missing_files_and_bad_toml_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("manifest.toml"), "cloud = \"nope.ply\"\n[[models]]\nmesh = \"m.obj\"\ncategory = \"part\"\n").unwrap();
        let err = load_scene(&dir.path().join("manifest.toml")).unwrap_err().to_string();
        assert!(err.contains("nope.ply"), "{err}");

        fs::write(dir.path().join("manifest.toml"), "cloud = \n").unwrap();
        let err = load_scene(&dir.path().join("manifest.toml")).unwrap_err();
        assert!(format!("{err:#}").contains("manifest"), "{err:#}");
    }

    #[test]
    fn classes_override_must_start_with_background() {
        let dir = tempfile::tempdir().unwrap();
        obj::write_mesh_obj(&dir.path().join("m.obj"), &box_mesh(Point3::splat(1.0))).unwrap();
        ply::write_cloud_ply(&dir.path().join("c.ply"), &[Point3::ZERO], &Default::default())
            .unwrap();
        fs::write(
            dir.path().join("manifest.toml"),
            "cloud = \"c.ply\"\nclasses = [\"part\"]\n[[models]]\nmesh = \"m.obj\"\ncategory = \"part\"\n",
        )
        .unwrap();
        let err = load_scene(&dir.path().join("manifest.toml")).unwrap_err().to_string();
        assert!(err.contains("background"), "{err}");
    }
}
