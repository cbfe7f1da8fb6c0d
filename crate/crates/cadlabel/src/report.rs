//! Evaluation and run reports: human-readable tables on stdout plus
//! machine-readable TOML (and optional JSON) files.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use cadlabel_core::eval::{BinTable, CloudEval, EvalSummary};

use crate::run::RunReport;

#[derive(Debug, Clone, Serialize)]
pub struct BinDto {
    pub lo: f64,
    pub hi: f64,
    pub points: u64,
    pub clouds: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
}

/// Machine-readable evaluation report. `miou_boundary`/`miou_inner` are
/// omitted when undefined (empty subsets).
#[derive(Debug, Clone, Serialize)]
pub struct EvalReportDto {
    pub oa: f64,
    pub macc: f64,
    pub mf1: f64,
    pub miou: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub miou_boundary: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub miou_inner: Option<f64>,
    pub pct_labeled: f64,
    pub clouds: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<Vec<BinDto>>,
    /// Row-normalized confusion percentages (NaN rows had no support);
    /// present for single-cloud reports.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confusion: Option<Vec<Vec<f64>>>,
}

impl EvalReportDto {
    pub fn new(summary: &EvalSummary, bins: Option<&BinTable>) -> Self {
        EvalReportDto {
            oa: summary.oa,
            macc: summary.macc,
            mf1: summary.macro_f1,
            miou: summary.miou,
            miou_boundary: summary.miou_boundary,
            miou_inner: summary.miou_inner,
            pct_labeled: summary.pct_labeled,
            clouds: summary.clouds,
            bins: bins.map(|table| {
                table
                    .rows
                    .iter()
                    .map(|r| BinDto {
                        lo: r.lo,
                        hi: r.hi,
                        points: r.points,
                        clouds: r.clouds,
                        accuracy: r.mean_accuracy,
                        std_error: r.std_error,
                    })
                    .collect()
            }),
            confusion: None,
        }
    }

    pub fn with_confusion(mut self, cloud: &CloudEval) -> Self {
        let n = cloud.confusion.num_classes();
        self.confusion = Some(
            cloud
                .confusion
                .row_percentages()
                .into_iter()
                .map(|row| row.unwrap_or_else(|| vec![f64::NAN; n]))
                .collect(),
        );
        self
    }

    pub fn write_toml(&self, path: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self).context("serializing report")?;
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).context("serializing report")?;
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:6.2}"),
        None => "     -".to_string(),
    }
}

/// Table the CLI prints after `evaluate` / `label` runs.
pub fn render_eval_text(summary: &EvalSummary, bins: Option<&BinTable>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "  clouds evaluated : {}", summary.clouds);
    let _ = writeln!(out, "  %labeled         : {:6.2}", summary.pct_labeled);
    let _ = writeln!(out, "  OA               : {:6.2}", summary.oa);
    let _ = writeln!(out, "  mACC             : {:6.2}", summary.macc);
    let _ = writeln!(out, "  macro-F1         : {:6.2}", summary.macro_f1);
    let _ = writeln!(out, "  mIoU             : {:6.2}", summary.miou);
    let _ = writeln!(out, "  mIoU@boundary    : {}", fmt_opt(summary.miou_boundary).trim_start());
    let _ = writeln!(out, "  mIoU@inner       : {}", fmt_opt(summary.miou_inner).trim_start());
    if let Some(bins) = bins {
        let _ = writeln!(out, "  score bins (accuracy % +/- stderr):");
        for row in &bins.rows {
            let _ = writeln!(
                out,
                "    [{:4.2}, {:4.2}{} {:>8} pts  acc {}{}",
                row.lo,
                row.hi,
                if row.hi >= 1.0 { "]" } else { ")" },
                row.points,
                fmt_opt(row.mean_accuracy).trim_start(),
                row.std_error.map(|e| format!(" +/- {e:.2}")).unwrap_or_default(),
            );
        }
    }
    out
}

/// One ablation row: metrics of the hard labels under a score subset.
#[derive(Debug, Clone, Serialize)]
pub struct AblateRow {
    pub scores: String,
    pub oa: f64,
    pub macc: f64,
    pub mf1: f64,
    pub miou: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub miou_boundary: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub miou_inner: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AblateReport {
    pub clouds: usize,
    pub rows: Vec<AblateRow>,
}

impl AblateReport {
    pub fn write_toml(&self, path: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self).context("serializing ablation table")?;
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "  scores     OA     mACC   mF1    mIoU   @bound @inner");
        for row in &self.rows {
            let _ = writeln!(
                out,
                "  {:<9}{:6.2} {:6.2} {:6.2} {:6.2} {} {}",
                row.scores,
                row.oa,
                row.macc,
                row.mf1,
                row.miou,
                fmt_opt(row.miou_boundary),
                fmt_opt(row.miou_inner),
            );
        }
        out
    }
}

pub fn write_run_report(path: &Path, report: &RunReport) -> Result<()> {
    let text = toml::to_string_pretty(report).context("serializing run report")?;
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_run_report_json(path: &Path, report: &RunReport) -> Result<()> {
    let text = serde_json::to_string_pretty(report).context("serializing run report")?;
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
