//! Pipeline configuration: defaults, TOML files, and the CADLABEL_CONFIG
//! environment override.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use cadlabel_core::labeling::{LabelParams, ScoreSubset};
use cadlabel_core::pipeline::ScoreOptions;
use cadlabel_core::region::RegionParams;
use cadlabel_core::svm::{SvmParams, TrainingParams};

pub const CONFIG_ENV_VAR: &str = "CADLABEL_CONFIG";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionConfig {
    /// Initial smoothness constraint, degrees.
    pub theta0: f64,
    /// Initial curvature threshold.
    pub kappa0: f64,
    pub min_region_size: usize,
    pub max_iters: usize,
    /// Neighbors per point for normals and growing.
    pub neighbors: usize,
    /// Fragmentation cap divisor (cap = points / divisor).
    pub fragmentation_divisor: usize,
}

impl Default for RegionConfig {
    fn default() -> Self {
        RegionConfig {
            theta0: 15.0,
            kappa0: 0.05,
            min_region_size: 10,
            max_iters: 8,
            neighbors: 16,
            fragmentation_divisor: 20,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    pub c: f64,
    /// Kernel width; omit for the 1/(3 sigma^2) heuristic.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub per_class_cap: usize,
    pub surface_samples: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            gamma: None,
            tol: 1e-3,
            max_iter: 200_000,
            per_class_cap: 1000,
            surface_samples: 1000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Worker threads; 0 uses all cores.
    pub threads: usize,
    /// Score subset: all | dist | dist+reg | svm+reg.
    pub scores: String,
    pub region: RegionConfig,
    pub svm: SvmConfig,
    /// Mesh-hull scale for the SVM background margin.
    pub hull_scale: f64,
    /// Region score below which a point is background training material.
    pub low_region_threshold: f64,
    pub hard_threshold: f64,
    pub weak_band: [f64; 2],
    /// Boundary-metric neighborhood radius, meters.
    pub boundary_radius: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            threads: 0,
            scores: "all".to_string(),
            region: RegionConfig::default(),
            svm: SvmConfig::default(),
            hull_scale: 1.5,
            low_region_threshold: 0.25,
            hard_threshold: 0.5,
            weak_band: [0.25, 0.75],
            boundary_radius: 0.1,
        }
    }
}

impl PipelineConfig {
    /// Loads from `path`, else from `$CADLABEL_CONFIG`, else the defaults.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let source = match path {
            Some(p) => Some(p.to_path_buf()),
            None => std::env::var_os(CONFIG_ENV_VAR).map(std::path::PathBuf::from),
        };
        let config: PipelineConfig = match source {
            Some(p) => {
                let text = std::fs::read_to_string(&p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
            }
            None => PipelineConfig::default(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.subset()?;
        let [lo, hi] = self.weak_band;
        if !(0.0 <= lo && lo < self.hard_threshold && self.hard_threshold < hi && hi <= 1.0) {
            bail!("label thresholds must satisfy 0 <= {lo} < {} < {hi} <= 1", self.hard_threshold);
        }
        if !(self.hull_scale > 0.0) {
            bail!("hull_scale must be positive");
        }
        if self.boundary_radius < 0.0 {
            bail!("boundary_radius must be non-negative");
        }
        if self.region.neighbors < 3 {
            bail!("region.neighbors must be at least 3");
        }
        if !(self.svm.c > 0.0) {
            bail!("svm.c must be positive");
        }
        Ok(())
    }

    pub fn subset(&self) -> Result<ScoreSubset> {
        self.scores
            .parse()
            .map_err(|_| anyhow::anyhow!("scores must be one of all|dist|dist+reg|svm+reg, got {:?}", self.scores))
    }

    pub fn score_options(&self) -> Result<ScoreOptions> {
        Ok(ScoreOptions {
            subset: self.subset()?,
            region: RegionParams {
                theta_deg: self.region.theta0,
                kappa: self.region.kappa0,
                min_region_size: self.region.min_region_size,
                neighbors: self.region.neighbors,
                max_iters: self.region.max_iters,
                fragmentation_divisor: self.region.fragmentation_divisor,
            },
            svm: SvmParams {
                c: self.svm.c,
                gamma: self.svm.gamma,
                tol: self.svm.tol,
                max_iter: self.svm.max_iter,
            },
            training: TrainingParams {
                per_class_cap: self.svm.per_class_cap,
                surface_samples: self.svm.surface_samples,
                low_region_threshold: self.low_region_threshold,
                ..TrainingParams::default()
            },
            hull_scale: self.hull_scale,
            seed: self.seed,
        })
    }

    pub fn label_params(&self) -> LabelParams {
        LabelParams {
            hard_threshold: self.hard_threshold,
            weak_band: (self.weak_band[0], self.weak_band[1]),
        }
    }
}
