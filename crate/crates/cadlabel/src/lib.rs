//! IO, configuration, and orchestration around `cadlabel-core`: scene
//! manifests and bundles, PLY/OBJ parsing, label file formats, reports, and
//! the parallel labeling pipeline behind the `cadlabel` CLI.

pub mod config;
pub mod labels_io;
pub mod manifest;
pub mod obj;
pub mod ply;
pub mod report;
pub mod run;
pub mod scene_spec;

pub use config::PipelineConfig;
pub use manifest::{load_scene, write_scene_bundle, Scene};
pub use run::{run_pipeline, PipelineOutput};
