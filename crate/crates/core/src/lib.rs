//! CAD-guided point cloud auto-labeling.
//!
//! Given a raw scan and a set of posed CAD meshes, this crate assigns every
//! point a semantic label in three schemes (hard one-hot, weak with an
//! unlabeled band, soft class-probability vectors). The pipeline splits the
//! cloud into one section per model by nearest-model distance, scores each
//! section point with three complementary signals (region growing against the
//! object hull, distance-to-mesh, and a weighted RBF SVM with Platt-calibrated
//! output), fuses them into a per-point object score, and thresholds that
//! score into labels.
//!
//! The crate is `no_std` (alloc required). File formats, the CLI, and the
//! parallel orchestrator live in the companion `cadlabel` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bvh;
pub mod cloud;
pub mod distance;
pub mod error;
pub mod eval;
pub mod hull;
pub mod kdtree;
pub mod labeling;
pub mod math;
pub mod mesh;
pub mod normals;
pub mod pipeline;
pub mod region;
pub mod sectioning;
pub mod svm;
pub mod synth;

pub use cloud::{ClassId, PointCloud, UNLABELED};
pub use error::{Error, Result};
pub use math::{Point3, Pose, Quat};
pub use mesh::{PosedModel, TriangleMesh};
