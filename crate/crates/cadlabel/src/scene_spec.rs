//! TOML scene specs for the synthetic generator.
//!
//! ```toml
//! seed = 42
//! density = 2500.0          # points per square meter
//! noise_sigma = 0.002       # meters
//! outlier_fraction = 0.01
//! occlusion_clearance = 0.015  # carve unscannable contact shadows
//!
//! [misalignment]
//! sigma_t = 0.01            # meters
//! sigma_r_deg = 0.5
//! sigma_s = 0.0
//!
//! [[objects]]
//! shape = "box"             # box | cylinder | lshape
//! size = [0.6, 0.4, 0.5]    # box/lshape full extents
//! category = "crate"
//! translation = [0.0, 0.0, 0.25]
//! yaw_deg = 30.0            # optional, about +z; or a full `rotation` quaternion
//!
//! [[objects]]
//! shape = "cylinder"
//! radius = 0.2
//! height = 0.6
//! category = "drum"
//! translation = [1.0, 0.5, 0.3]
//!
//! [[background]]
//! center = [0.0, 0.0, 0.0]
//! edge_u = [4.0, 0.0, 0.0]
//! edge_v = [0.0, 4.0, 0.0]
//! ```

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use cadlabel_core::math::{Point3, Pose, Quat};
use cadlabel_core::synth::{Misalignment, ObjectSpec, PrimitiveShape, RectSpec, SceneSpec};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneSpecFile {
    #[serde(default = "default_seed")]
    seed: u64,
    density: f64,
    #[serde(default)]
    noise_sigma: f64,
    #[serde(default)]
    outlier_fraction: f64,
    #[serde(default)]
    occlusion_clearance: f64,
    #[serde(default)]
    misalignment: MisalignmentFile,
    objects: Vec<ObjectFile>,
    #[serde(default)]
    background: Vec<RectFile>,
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MisalignmentFile {
    #[serde(default)]
    sigma_t: f64,
    #[serde(default)]
    sigma_r_deg: f64,
    #[serde(default)]
    sigma_s: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectFile {
    shape: String,
    category: String,
    #[serde(default)]
    size: Option<[f64; 3]>,
    #[serde(default)]
    radius: Option<f64>,
    #[serde(default)]
    height: Option<f64>,
    #[serde(default = "default_segments")]
    segments: usize,
    #[serde(default)]
    thickness: Option<f64>,
    #[serde(default)]
    translation: [f64; 3],
    #[serde(default)]
    rotation: Option<[f64; 4]>,
    #[serde(default)]
    yaw_deg: Option<f64>,
    #[serde(default = "one3")]
    scale: [f64; 3],
}

fn default_segments() -> usize {
    24
}

fn one3() -> [f64; 3] {
    [1.0; 3]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RectFile {
    center: [f64; 3],
    edge_u: [f64; 3],
    edge_v: [f64; 3],
}

fn p3(a: [f64; 3]) -> Point3 {
    Point3::new(a[0], a[1], a[2])
}

impl ObjectFile {
    fn shape(&self) -> Result<PrimitiveShape> {
        match self.shape.as_str() {
            "box" => {
                let size = self.size.context("box objects need `size = [sx, sy, sz]`")?;
                Ok(PrimitiveShape::Box { size: p3(size) })
            }
            "cylinder" => Ok(PrimitiveShape::Cylinder {
                radius: self.radius.context("cylinder objects need `radius`")?,
                height: self.height.context("cylinder objects need `height`")?,
                segments: self.segments,
            }),
            "lshape" => {
                let size = self.size.context("lshape objects need `size = [sx, sy, sz]`")?;
                let size = p3(size);
                Ok(PrimitiveShape::LShape {
                    size,
                    thickness: self.thickness.unwrap_or(0.25 * size.y.min(size.z)),
                })
            }
            other => bail!("unknown shape {other:?} (expected box | cylinder | lshape)"),
        }
    }

    fn pose(&self) -> Result<Pose> {
        let rotation = match (self.rotation, self.yaw_deg) {
            (Some(_), Some(_)) => bail!("give either `rotation` or `yaw_deg`, not both"),
            (Some([w, x, y, z]), None) => {
                let q = Quat::new(w, x, y, z);
                if (q.norm() - 1.0).abs() > 1e-6 {
                    bail!("object rotation quaternion is not unit length");
                }
                q.normalized()
            }
            (None, Some(yaw)) => Quat::from_axis_angle(Point3::new(0.0, 0.0, 1.0), yaw.to_radians()),
            (None, None) => Quat::IDENTITY,
        };
        Ok(Pose::new(p3(self.translation), rotation, p3(self.scale)))
    }
}

pub fn load_scene_spec(path: &Path) -> Result<SceneSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: SceneSpecFile =
        toml::from_str(&text).with_context(|| format!("parsing scene spec {}", path.display()))?;
    let mut objects = Vec::with_capacity(file.objects.len());
    for (i, o) in file.objects.iter().enumerate() {
        let context = || format!("{}: object {i}", path.display());
        objects.push(ObjectSpec {
            shape: o.shape().with_context(context)?,
            category: o.category.clone(),
            pose: o.pose().with_context(context)?,
        });
    }
    Ok(SceneSpec {
        objects,
        background: file
            .background
            .iter()
            .map(|r| RectSpec { center: p3(r.center), edge_u: p3(r.edge_u), edge_v: p3(r.edge_v) })
            .collect(),
        density: file.density,
        noise_sigma: file.noise_sigma,
        outlier_fraction: file.outlier_fraction,
        occlusion_clearance: file.occlusion_clearance,
        misalignment: Misalignment {
            sigma_t: file.misalignment.sigma_t,
            sigma_r_deg: file.misalignment.sigma_r_deg,
            sigma_s: file.misalignment.sigma_s,
        },
        seed: file.seed,
    })
}
