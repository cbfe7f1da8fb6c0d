//! Per-section scoring (region + distance + SVM + fusion) and scattering of
//! section results back onto the full cloud.
//!
//! This module is the single-threaded computational heart of the pipeline;
//! the `cadlabel` crate drives it per section, in parallel, with timing and
//! reporting around it.

use alloc::vec::Vec;

use crate::cloud::ClassId;
use crate::distance::{score_distances, DistanceScoreField};
use crate::error::{Error, Result};
use crate::hull::convex_hull;
use crate::kdtree::SpatialIndex;
use crate::labeling::{fuse_scores, ScoreSubset};
use crate::math::{mix_seed, Point3};
use crate::mesh::TriangleMesh;
use crate::region::{
    adapt_and_grow, build_h_obj, mesh_proximal_indices, region_score, RegionParams,
    RegionScoreField,
};
use crate::sectioning::Section;
use crate::svm::{
    build_training_set, fit_and_calibrate, svm_score, FeatureScaler, SvmModel, SvmParams,
    TrainingParams,
};

/// Everything the scoring stages need to know.
#[derive(Debug, Clone)]
pub struct ScoreOptions {
    pub subset: ScoreSubset,
    pub region: RegionParams,
    pub svm: SvmParams,
    pub training: TrainingParams,
    /// Mesh-hull scale factor for the SVM background margin.
    pub hull_scale: f64,
    pub seed: u64,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        ScoreOptions {
            subset: ScoreSubset::All,
            region: RegionParams::default(),
            svm: SvmParams::default(),
            training: TrainingParams::default(),
            hull_scale: 1.5,
            seed: 42,
        }
    }
}

/// Per-section anomalies worth surfacing in the run report.
#[derive(Debug, Clone, Copy, Default)]
pub struct SectionFlags {
    /// Region adaptation never reached 2..=cap regions.
    pub adaptation_failed: bool,
    /// Distance threshold fell back to the 90th percentile.
    pub threshold_fallback: bool,
    /// Background training class was empty; farthest-5% fallback used.
    pub background_fallback: bool,
    /// SMO hit its iteration cap before the KKT gap closed.
    pub svm_not_converged: bool,
    /// Platt calibration saw single-class targets.
    pub platt_fallback: bool,
}

/// All per-point scores for one section.
#[derive(Debug, Clone)]
pub struct SectionScores {
    pub model_index: usize,
    pub original_indices: Vec<u32>,
    pub region_ids: Vec<u32>,
    pub region: RegionScoreField,
    pub distance: DistanceScoreField,
    pub svm: Option<Vec<f64>>,
    /// Fused object score c per point.
    pub fused: Vec<f64>,
    pub flags: SectionFlags,
    /// Fitted classifier, kept for debugging/dumping.
    pub svm_model: Option<SvmModel>,
}

/// Scores one non-empty section. `normals`/`curvatures` are section-local
/// slices (the caller estimates them on the full cloud once and selects).
pub fn score_section(
    section: &Section,
    normals: &[Point3],
    curvatures: &[f64],
    world_mesh: &TriangleMesh,
    opts: &ScoreOptions,
) -> Result<SectionScores> {
    let n = section.len();
    if n == 0 {
        return Err(Error::EmptyCloud);
    }
    if normals.len() != n {
        return Err(Error::MissingNormals);
    }
    if curvatures.len() != n {
        return Err(Error::LengthMismatch { expected: n, actual: curvatures.len() });
    }

    let mut flags = SectionFlags::default();

    let index = SpatialIndex::new(&section.cloud)?;
    let neighbors = index.neighbor_lists(opts.region.neighbors);
    let segmentation = adapt_and_grow(&neighbors, normals, curvatures, &opts.region);
    flags.adaptation_failed = segmentation.flagged;

    let proximal = mesh_proximal_indices(&index, &section.feet);
    let h_obj = build_h_obj(&section.cloud, &proximal)?;
    let region = region_score(&segmentation, &section.cloud, &h_obj);

    let distance = score_distances(&section.distances, &region)?;
    flags.threshold_fallback = distance.fallback;

    let (svm, svm_model) = if opts.subset.uses_svm() {
        let h_mesh = convex_hull(world_mesh.vertices())?.scaled(opts.hull_scale)?;
        let ts = build_training_set(
            &section.cloud,
            world_mesh,
            &proximal,
            &region,
            &h_mesh,
            &section.distances,
            &opts.training,
            mix_seed(opts.seed, 0x5EC + section.model_index as u64),
        )?;
        flags.background_fallback = ts.background_fallback;
        let scaler = FeatureScaler::from_points(section.cloud.points())?;
        let model = fit_and_calibrate(&ts, scaler, &opts.svm)?;
        flags.svm_not_converged = !model.converged;
        flags.platt_fallback = model.platt.map(|p| p.fallback).unwrap_or(false);
        let scores = svm_score(&model, section.cloud.points())?;
        (Some(scores), Some(model))
    } else {
        (None, None)
    };

    let fused = fuse_scores(&region.0, &distance.scores, svm.as_deref(), opts.subset)?;

    Ok(SectionScores {
        model_index: section.model_index,
        original_indices: section.original_indices.clone(),
        region_ids: segmentation.region_ids,
        region,
        distance,
        svm,
        fused,
        flags,
    svm_model,
    })
}

/// Re-fuses existing section scores under a different subset (used by the
/// ablation runner; identical to scoring from scratch with that subset when
/// the SVM scores are present).
pub fn refuse_subset(scores: &SectionScores, subset: ScoreSubset) -> Result<Vec<f64>> {
    fuse_scores(&scores.region.0, &scores.distance.scores, scores.svm.as_deref(), subset)
}

/// Full-cloud score field assembled from the disjoint sections.
#[derive(Debug, Clone)]
pub struct CloudScores {
    /// Fused object score per point.
    pub c: Vec<f64>,
    /// Target class id per point (the section model's category).
    pub target: Vec<ClassId>,
    /// 1-based section id per point.
    pub section: Vec<u32>,
    /// Diagnostics, per point.
    pub region: Vec<Option<f64>>,
    pub distance: Vec<f64>,
    pub svm: Vec<Option<f64>>,
    pub region_id: Vec<u32>,
}

/// Scatters per-section scores into full-cloud arrays. `targets[m]` is the
/// class id of model m. Sections must cover every point exactly once.
pub fn scatter_scores(
    total_points: usize,
    sections: &[SectionScores],
    targets: &[ClassId],
) -> Result<CloudScores> {
    let mut c = alloc::vec![f64::NAN; total_points];
    let mut target = alloc::vec![0 as ClassId; total_points];
    let mut section_id = alloc::vec![0u32; total_points];
    let mut region = alloc::vec![None; total_points];
    let mut distance = alloc::vec![0.0; total_points];
    let mut svm = alloc::vec![None; total_points];
    let mut region_id = alloc::vec![0u32; total_points];
    let mut covered = 0usize;

    for s in sections {
        let class = *targets
            .get(s.model_index)
            .ok_or(Error::IndexOutOfRange { index: s.model_index, count: targets.len() })?;
        for (k, &orig) in s.original_indices.iter().enumerate() {
            let i = orig as usize;
            if i >= total_points || !c[i].is_nan() {
                return Err(Error::InvalidParameter("sections must cover each point exactly once"));
            }
            c[i] = s.fused[k];
            target[i] = class;
            section_id[i] = s.model_index as u32 + 1;
            region[i] = s.region.get(k);
            distance[i] = s.distance.scores[k];
            svm[i] = s.svm.as_ref().map(|v| v[k]);
            region_id[i] = s.region_ids[k];
            covered += 1;
        }
    }
    if covered != total_points {
        return Err(Error::InvalidParameter("sections do not cover the whole cloud"));
    }
    Ok(CloudScores { c, target, section: section_id, region, distance, svm, region_id })
}
