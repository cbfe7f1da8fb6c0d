//! Pipeline orchestration: sectioning, parallel per-section scoring, label
//! assembly, and the run report.
//!
//! Everything that parallelizes is an order-preserving map over points or
//! sections with per-section RNG streams derived from the seed, so results
//! are byte-identical across thread counts.

use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use cadlabel_core::bvh::MeshDistanceQuery;
use cadlabel_core::cloud::ClassId;
use cadlabel_core::labeling::{
    assemble_labels, check_scheme_consistency, LabelScheme, LabelSet, ScoreSubset, SoftLabels,
};
use cadlabel_core::mesh::TriangleMesh;
use cadlabel_core::normals::estimate_normals_and_curvature;
use cadlabel_core::pipeline::{scatter_scores, score_section, CloudScores, SectionScores};
use cadlabel_core::sectioning::{assemble_assignment, assign_point, extract_section, Section};

use crate::config::PipelineConfig;
use crate::manifest::Scene;

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SectionReport {
    /// 1-based section id.
    pub section: usize,
    pub category: String,
    pub points: usize,
    pub empty: bool,
    pub adaptation_failed: bool,
    pub threshold_fallback: bool,
    pub background_fallback: bool,
    pub svm_not_converged: bool,
    pub platt_fallback: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub total_points: usize,
    pub seed: u64,
    pub threads: usize,
    pub scores: String,
    pub stages: Vec<StageTiming>,
    pub total_ms: f64,
    pub sections: Vec<SectionReport>,
    pub warnings: Vec<String>,
}

pub struct PipelineOutput {
    pub scores: CloudScores,
    pub hard: Vec<ClassId>,
    pub weak: Vec<ClassId>,
    pub soft: SoftLabels,
    pub report: RunReport,
    /// Per-section scores, for debug dumps and the ablation runner.
    pub sections: Vec<SectionScores>,
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("building the worker thread pool")
}

/// Runs sectioning and all three score stages; label assembly is separate so
/// the ablation runner can re-fuse without rescoring.
pub fn run_scoring(scene: &Scene, config: &PipelineConfig) -> Result<ScoringResult> {
    let opts = config.score_options()?;
    let pool = thread_pool(config.threads)?;
    let cloud = &scene.cloud;
    if cloud.is_empty() {
        bail!("scene cloud is empty");
    }
    if scene.models.is_empty() {
        bail!("scene has no models");
    }

    let mut stages = Vec::new();
    let mut warnings = Vec::new();
    let t_total = Instant::now();

    // normals + curvature over the full cloud
    let t = Instant::now();
    let estimate = estimate_normals_and_curvature(cloud, opts.region.neighbors)
        .map_err(|e| anyhow!("normal estimation: {e}"))?;
    stages.push(StageTiming { stage: "normals".into(), ms: ms_since(t) });

    // nearest-model assignment
    let t = Instant::now();
    let world_meshes: Vec<TriangleMesh> = scene.models.iter().map(|m| m.world_mesh()).collect();
    let queries: Vec<MeshDistanceQuery> = scene
        .models
        .iter()
        .zip(&world_meshes)
        .enumerate()
        .map(|(i, (model, mesh))| {
            MeshDistanceQuery::from_mesh(mesh)
                .map_err(|e| anyhow!("model {i} ({}): {e}", model.category))
        })
        .collect::<Result<_>>()?;
    let per_point: Vec<(u32, f64, cadlabel_core::math::Point3)> = pool.install(|| {
        cloud.points().par_iter().map(|&p| assign_point(p, &queries)).collect()
    });
    let assignment = assemble_assignment(per_point, queries.len());
    stages.push(StageTiming { stage: "sectioning".into(), ms: ms_since(t) });

    // per-section scoring
    let t = Instant::now();
    let mut sections: Vec<Section> = Vec::new();
    let mut reports: Vec<SectionReport> = Vec::new();
    for m in 1..=scene.models.len() {
        let section = extract_section(cloud, &assignment, m)
            .map_err(|e| anyhow!("extracting section {m}: {e}"))?;
        let empty = section.is_empty();
        reports.push(SectionReport {
            section: m,
            category: scene.models[m - 1].category.clone(),
            points: section.len(),
            empty,
            adaptation_failed: false,
            threshold_fallback: false,
            background_fallback: false,
            svm_not_converged: false,
            platt_fallback: false,
        });
        if empty {
            warnings.push(format!(
                "section {m} ({}) attracted no points; it produces no labels",
                scene.models[m - 1].category
            ));
        } else {
            sections.push(section);
        }
    }

    let scored: Vec<SectionScores> = pool.install(|| {
        sections
            .par_iter()
            .map(|section| {
                let normals: Vec<_> = section
                    .original_indices
                    .iter()
                    .map(|&i| estimate.normals[i as usize])
                    .collect();
                let curvatures: Vec<f64> = section
                    .original_indices
                    .iter()
                    .map(|&i| estimate.curvatures[i as usize])
                    .collect();
                score_section(
                    section,
                    &normals,
                    &curvatures,
                    &world_meshes[section.model_index],
                    &opts,
                )
                .map_err(|e| {
                    anyhow!(
                        "scoring section {} ({}): {e}",
                        section.model_index + 1,
                        scene.models[section.model_index].category
                    )
                })
            })
            .collect::<Result<_>>()
    })?;
    for s in &scored {
        let report = &mut reports[s.model_index];
        report.adaptation_failed = s.flags.adaptation_failed;
        report.threshold_fallback = s.flags.threshold_fallback;
        report.background_fallback = s.flags.background_fallback;
        report.svm_not_converged = s.flags.svm_not_converged;
        report.platt_fallback = s.flags.platt_fallback;
        if s.flags.adaptation_failed {
            warnings.push(format!("section {}: region adaptation gave up", s.model_index + 1));
        }
        if s.flags.background_fallback {
            warnings.push(format!(
                "section {}: empty background class, used farthest-5% fallback",
                s.model_index + 1
            ));
        }
        if s.flags.svm_not_converged {
            warnings.push(format!("section {}: SMO hit its iteration cap", s.model_index + 1));
        }
    }
    stages.push(StageTiming { stage: "scoring".into(), ms: ms_since(t) });

    Ok(ScoringResult {
        sections: scored,
        reports,
        warnings,
        stages,
        total_points: cloud.len(),
        started: t_total,
    })
}

pub struct ScoringResult {
    pub sections: Vec<SectionScores>,
    pub reports: Vec<SectionReport>,
    pub warnings: Vec<String>,
    pub stages: Vec<StageTiming>,
    pub total_points: usize,
    started: Instant,
}

/// Fuses scattered scores into the three label schemes.
pub fn assemble_output(
    scene: &Scene,
    config: &PipelineConfig,
    mut scoring: ScoringResult,
) -> Result<PipelineOutput> {
    let t = Instant::now();
    let targets: Vec<ClassId> = scene
        .models
        .iter()
        .map(|m| scene.registry.resolve(&m.category).map_err(|e| anyhow!("{e}")))
        .collect::<Result<_>>()?;
    let scores = scatter_scores(scoring.total_points, &scoring.sections, &targets)
        .map_err(|e| anyhow!("scattering section scores: {e}"))?;
    let params = config.label_params();
    let hard = assemble_labels(&scores.c, &scores.target, &scene.registry, LabelScheme::Hard, &params)
        .map_err(|e| anyhow!("hard labels: {e}"))?;
    let weak = assemble_labels(&scores.c, &scores.target, &scene.registry, LabelScheme::Weak, &params)
        .map_err(|e| anyhow!("weak labels: {e}"))?;
    let soft = assemble_labels(&scores.c, &scores.target, &scene.registry, LabelScheme::Soft, &params)
        .map_err(|e| anyhow!("soft labels: {e}"))?;
    if let Err(problem) = check_scheme_consistency(&hard, &weak, &soft, &scores.c, &params) {
        bail!("internal scheme consistency violated: {problem}");
    }
    scoring.stages.push(StageTiming { stage: "labels".into(), ms: ms_since(t) });

    let (LabelSet::Hard(hard), LabelSet::Weak(weak), LabelSet::Soft(soft)) = (hard, weak, soft)
    else {
        unreachable!("assemble_labels returns the requested scheme");
    };
    let total_ms = ms_since(scoring.started);
    Ok(PipelineOutput {
        scores,
        hard,
        weak,
        soft,
        report: RunReport {
            total_points: scoring.total_points,
            seed: config.seed,
            threads: config.threads,
            scores: config.scores.clone(),
            stages: scoring.stages,
            total_ms,
            sections: scoring.reports,
            warnings: scoring.warnings,
        },
        sections: scoring.sections,
    })
}

/// The whole pipeline: sectioning, scoring under the configured subset,
/// fusion, and all three label schemes.
pub fn run_pipeline(scene: &Scene, config: &PipelineConfig) -> Result<PipelineOutput> {
    let scoring = run_scoring(scene, config)?;
    assemble_output(scene, config, scoring)
}

/// Re-fuses already-computed section scores under another subset and builds
/// labels from them. Output-identical to a fresh `run_pipeline` with that
/// subset (scoring does not depend on the fused subset).
pub fn refuse_and_assemble(
    scene: &Scene,
    config: &PipelineConfig,
    scoring: &ScoringResult,
    subset: ScoreSubset,
) -> Result<PipelineOutput> {
    let mut refused = ScoringResult {
        sections: scoring
            .sections
            .iter()
            .map(|s| -> Result<SectionScores> {
                let mut s = s.clone();
                s.fused = cadlabel_core::pipeline::refuse_subset(&s, subset)
                    .map_err(|e| anyhow!("re-fusing section {}: {e}", s.model_index + 1))?;
                if !subset.uses_svm() {
                    s.svm = None;
                    s.svm_model = None;
                }
                Ok(s)
            })
            .collect::<Result<_>>()?,
        reports: scoring.reports.clone(),
        warnings: scoring.warnings.clone(),
        stages: scoring.stages.clone(),
        total_points: scoring.total_points,
        started: Instant::now(),
    };
    let mut config = config.clone();
    config.scores = subset.as_str().to_string();
    refused.stages.push(StageTiming { stage: format!("refuse[{subset}]"), ms: 0.0 });
    assemble_output(scene, &config, refused)
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}
