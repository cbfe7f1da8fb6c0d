//! `cadlabel`: CAD-guided semantic auto-labeling of 3D point clouds.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use cadlabel::config::PipelineConfig;
use cadlabel::manifest::{load_scene, write_scene_bundle, Scene};
use cadlabel::report::{AblateReport, AblateRow, EvalReportDto};
use cadlabel::run::{refuse_and_assemble, run_pipeline, run_scoring, PipelineOutput};
use cadlabel::{labels_io, ply, report, scene_spec};
use cadlabel_core::cloud::{ClassId, PointCloud, UNLABELED};
use cadlabel_core::eval::{
    binned_accuracy, evaluate_cloud, summarize, uniform_bin_edges, BinnedCloud,
};
use cadlabel_core::kdtree::SpatialIndex;
use cadlabel_core::labeling::ScoreSubset;
use cadlabel_core::synth::generate_scene;

#[derive(Parser)]
#[command(name = "cadlabel", version, about = "CAD-guided semantic auto-labeling of 3D point clouds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Pipeline config file (TOML); defaults to $CADLABEL_CONFIG or built-ins.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the worker thread count (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
}

impl ConfigArgs {
    fn load(&self) -> Result<PipelineConfig> {
        let mut config = PipelineConfig::load(self.config.as_deref())?;
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(threads) = self.threads {
            config.threads = threads;
        }
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Label a scene: emits hard/weak/soft label files and a run report.
    Label {
        /// Scene manifest (TOML).
        manifest: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Which label files to write.
        #[arg(long, default_value = "all", value_parser = ["hard", "weak", "soft", "all"])]
        scheme: String,
        /// Score subset feeding the fused object score.
        #[arg(long, default_value = "all", value_parser = ["all", "dist", "dist+reg", "svm+reg"])]
        scores: String,
        #[command(flatten)]
        config: ConfigArgs,
        /// Also write per-point diagnostics (debug.ply), the soft-label CSV,
        /// and per-section SVM dumps.
        #[arg(long)]
        debug_ply: bool,
        /// Additionally write the run report as JSON.
        #[arg(long)]
        json_report: bool,
    },
    /// Compare predicted labels against ground truth.
    Evaluate {
        /// Predicted labels (PLY with a uint16 "label" property; a float
        /// "score" property enables the binned-accuracy table).
        #[arg(long)]
        pred: PathBuf,
        /// Ground-truth labels (PLY with a uint16 "label" property).
        #[arg(long)]
        gt: PathBuf,
        /// Point coordinates for the boundary split (PLY).
        #[arg(long)]
        cloud: PathBuf,
        /// Neighborhood radius for the boundary metric, meters.
        #[arg(long, default_value_t = 0.1)]
        boundary_radius: f64,
        /// Number of uniform score bins.
        #[arg(long, default_value_t = 10)]
        bins: usize,
        /// Report file (TOML).
        #[arg(long)]
        out: PathBuf,
        /// Additionally write the report as JSON.
        #[arg(long)]
        json_report: bool,
    },
    /// Generate a synthetic scene bundle from a scene spec.
    Synth {
        /// Scene spec (TOML).
        spec: PathBuf,
        /// Output bundle directory.
        #[arg(long)]
        out: PathBuf,
        /// Override the seed from the scene file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run all four score subsets over a list of scenes and tabulate metrics.
    Ablate {
        /// Text file with one manifest path per line.
        manifest_list: PathBuf,
        /// Confirms every listed scene carries ground-truth labels.
        #[arg(long, required = true)]
        gt_available: bool,
        /// Output directory for the ablation table.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Additionally write the table as JSON.
        #[arg(long)]
        json_report: bool,
    },
}

fn main() {
    if let Err(err) = dispatch(Cli::parse()) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Label { manifest, out, scheme, scores, config, debug_ply, json_report } => {
            let mut cfg = config.load()?;
            cfg.scores = scores;
            cfg.validate()?;
            cmd_label(&manifest, &out, &scheme, &cfg, debug_ply, json_report)
        }
        Command::Evaluate { pred, gt, cloud, boundary_radius, bins, out, json_report } => {
            cmd_evaluate(&pred, &gt, &cloud, boundary_radius, bins, &out, json_report)
        }
        Command::Synth { spec, out, seed } => cmd_synth(&spec, &out, seed),
        Command::Ablate { manifest_list, gt_available, out, config, json_report } => {
            let cfg = config.load()?;
            cmd_ablate(&manifest_list, gt_available, &out, &cfg, json_report)
        }
    }
}

fn cmd_label(
    manifest: &Path,
    out: &Path,
    scheme: &str,
    config: &PipelineConfig,
    debug_ply: bool,
    json_report: bool,
) -> Result<()> {
    let scene = load_scene(manifest)?;
    let output = run_pipeline(&scene, config)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    let points = scene.cloud.points();
    if scheme == "hard" || scheme == "all" {
        labels_io::write_label_ply(&out.join("labels_hard.ply"), points, &output.hard, &output.scores.c)?;
    }
    if scheme == "weak" || scheme == "all" {
        labels_io::write_label_ply(&out.join("labels_weak.ply"), points, &output.weak, &output.scores.c)?;
    }
    if scheme == "soft" || scheme == "all" {
        labels_io::write_soft_labels(&out.join("labels_soft.slbl"), &output.soft, &scene.registry)?;
    }
    labels_io::write_classes_txt(&out.join("classes.txt"), &scene.registry)?;
    report::write_run_report(&out.join("report.toml"), &output.report)?;
    if json_report {
        report::write_run_report_json(&out.join("report.json"), &output.report)?;
    }
    if debug_ply {
        write_debug_artifacts(out, &scene, &output)?;
    }

    for warning in &output.report.warnings {
        eprintln!("warning: {warning}");
    }
    println!(
        "labeled {} points across {} sections in {:.1} ms (scores: {})",
        output.report.total_points,
        output.report.sections.len(),
        output.report.total_ms,
        output.report.scores,
    );
    for stage in &output.report.stages {
        println!("  {:<12} {:>10.1} ms", stage.stage, stage.ms);
    }
    println!("outputs in {}", out.display());
    Ok(())
}

fn write_debug_artifacts(out: &Path, scene: &Scene, output: &PipelineOutput) -> Result<()> {
    ply::write_debug_ply(
        &out.join("debug.ply"),
        scene.cloud.points(),
        &ply::DebugColumns {
            section: &output.scores.section,
            region: &output.scores.region_id,
            rscore: &output.scores.region,
            dscore: &output.scores.distance,
            svmscore: &output.scores.svm,
            score: &output.scores.c,
            label: &output.hard,
        },
    )?;
    labels_io::write_soft_csv(&out.join("labels_soft.csv"), &output.soft, &scene.registry)?;
    for section in &output.sections {
        if let Some(model) = &section.svm_model {
            labels_io::write_svm_dump(
                &out.join(format!("svm_section_{:02}.txt", section.model_index + 1)),
                model,
                section.model_index + 1,
            )?;
        }
    }
    Ok(())
}

fn load_labels(path: &Path) -> Result<(Vec<ClassId>, Option<Vec<f32>>)> {
    let file = ply::read_cloud_ply(path)?;
    let labels = file
        .labels
        .ok_or_else(|| anyhow!("{}: no \"label\" property in the file", path.display()))?;
    Ok((labels, file.scores))
}

fn cmd_evaluate(
    pred_path: &Path,
    gt_path: &Path,
    cloud_path: &Path,
    boundary_radius: f64,
    bins: usize,
    out: &Path,
    json_report: bool,
) -> Result<()> {
    let (pred, scores) = load_labels(pred_path)?;
    let (gt, _) = load_labels(gt_path)?;
    let cloud_file = ply::read_cloud_ply(cloud_path)?;
    let cloud = PointCloud::new(cloud_file.points)
        .map_err(|e| anyhow!("{}: {e}", cloud_path.display()))?;
    if pred.len() != gt.len() || pred.len() != cloud.len() {
        bail!(
            "length mismatch: pred {} vs gt {} vs cloud {}",
            pred.len(),
            gt.len(),
            cloud.len()
        );
    }
    let num_classes = pred
        .iter()
        .chain(&gt)
        .filter(|&&l| l != UNLABELED)
        .map(|&l| l as usize + 1)
        .max()
        .ok_or_else(|| anyhow!("no labeled points to evaluate"))?;

    let index = SpatialIndex::new(&cloud).map_err(|e| anyhow!("{e}"))?;
    let cloud_eval = evaluate_cloud(&index, &pred, &gt, num_classes, boundary_radius)
        .map_err(|e| anyhow!("evaluating: {e}"))?;
    let bin_table = match &scores {
        Some(s) if bins > 0 => {
            let s64: Vec<f64> = s.iter().map(|&v| (v as f64).clamp(0.0, 1.0)).collect();
            Some(
                binned_accuracy(
                    &[BinnedCloud { pred: &pred, gt: &gt, score: &s64 }],
                    &uniform_bin_edges(bins),
                )
                .map_err(|e| anyhow!("binning: {e}"))?,
            )
        }
        _ => None,
    };
    if scores.is_none() && bins > 0 {
        eprintln!(
            "note: {} has no \"score\" property; skipping the binned-accuracy table",
            pred_path.display()
        );
    }

    let summary = summarize(std::slice::from_ref(&cloud_eval)).map_err(|e| anyhow!("{e}"))?;
    print!("{}", report::render_eval_text(&summary, bin_table.as_ref()));
    let dto = EvalReportDto::new(&summary, bin_table.as_ref()).with_confusion(&cloud_eval);
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    dto.write_toml(out)?;
    if json_report {
        dto.write_json(&out.with_extension("json"))?;
    }
    println!("report written to {}", out.display());
    Ok(())
}

fn cmd_synth(spec_path: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let mut spec = scene_spec::load_scene_spec(spec_path)?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let scene = generate_scene(&spec).map_err(|e| anyhow!("generating scene: {e}"))?;
    let manifest = write_scene_bundle(out, &scene)?;
    println!(
        "generated {} points, {} models, {} classes",
        scene.cloud.len(),
        scene.models.len(),
        scene.registry.num_classes()
    );
    println!("bundle manifest: {}", manifest.display());
    Ok(())
}

fn cmd_ablate(
    list_path: &Path,
    gt_available: bool,
    out: &Path,
    config: &PipelineConfig,
    json_report: bool,
) -> Result<()> {
    if !gt_available {
        bail!("--gt-available is required: every listed scene must carry ground-truth labels");
    }
    let list = fs::read_to_string(list_path)
        .with_context(|| format!("reading manifest list {}", list_path.display()))?;
    let manifests: Vec<PathBuf> = list
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(PathBuf::from)
        .collect();
    if manifests.is_empty() {
        bail!("{}: no manifests listed", list_path.display());
    }

    // force a subset that computes all three scores; fusion variants reuse them
    let mut scoring_config = config.clone();
    scoring_config.scores = "all".to_string();

    let mut per_subset: Vec<Vec<cadlabel_core::eval::CloudEval>> =
        vec![Vec::new(); ScoreSubset::ALL_SUBSETS.len()];
    for manifest in &manifests {
        let scene = load_scene(manifest)?;
        let gt = scene
            .cloud
            .gt_labels()
            .ok_or_else(|| anyhow!("{}: scene has no ground-truth labels", manifest.display()))?
            .to_vec();
        let index = SpatialIndex::new(&scene.cloud).map_err(|e| anyhow!("{e}"))?;
        let scoring = run_scoring(&scene, &scoring_config)?;
        for (k, subset) in ScoreSubset::ALL_SUBSETS.iter().enumerate() {
            let output = refuse_and_assemble(&scene, &scoring_config, &scoring, *subset)?;
            let eval = evaluate_cloud(
                &index,
                &output.hard,
                &gt,
                scene.registry.num_classes(),
                config.boundary_radius,
            )
            .map_err(|e| anyhow!("evaluating {} under {subset}: {e}", manifest.display()))?;
            per_subset[k].push(eval);
        }
        println!("scored {}", manifest.display());
    }

    let mut rows = Vec::new();
    for (k, subset) in ScoreSubset::ALL_SUBSETS.iter().enumerate() {
        let summary = summarize(&per_subset[k]).map_err(|e| anyhow!("{e}"))?;
        rows.push(AblateRow {
            scores: subset.to_string(),
            oa: summary.oa,
            macc: summary.macc,
            mf1: summary.macro_f1,
            miou: summary.miou,
            miou_boundary: summary.miou_boundary,
            miou_inner: summary.miou_inner,
        });
    }
    let table = AblateReport { clouds: manifests.len(), rows };
    print!("{}", table.render_text());
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    table.write_toml(&out.join("ablation.toml"))?;
    if json_report {
        let text = serde_json::to_string_pretty(&table)?;
        fs::write(out.join("ablation.json"), text)?;
    }
    println!("ablation table written to {}", out.join("ablation.toml").display());
    Ok(())
}
