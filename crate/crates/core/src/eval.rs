//! Segmentation evaluation: overall and class-balanced metrics, the
//! boundary/inner split, confusion matrices, and score-binned accuracy.
//!
//! Unlabeled points (sentinel 65535) on either side are excluded everywhere.
//! Classes with no support in either prediction or ground truth for a cloud
//! are excluded from that cloud's class means. Metrics are computed per cloud
//! and averaged across the evaluation set.

use alloc::vec::Vec;

use crate::cloud::{ClassId, UNLABELED};
use crate::error::{Error, Result};
use crate::kdtree::SpatialIndex;

/// Row-major confusion counts; rows are ground truth, columns predictions.
#[derive(Debug, Clone)]
pub struct ConfusionMatrix {
    num_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn from_labels(pred: &[ClassId], gt: &[ClassId], num_classes: usize) -> Result<Self> {
        if pred.len() != gt.len() {
            return Err(Error::LengthMismatch { expected: gt.len(), actual: pred.len() });
        }
        let mut counts = alloc::vec![0u64; num_classes * num_classes];
        for (&p, &g) in pred.iter().zip(gt) {
            if p == UNLABELED || g == UNLABELED {
                continue;
            }
            if p as usize >= num_classes {
                return Err(Error::InvalidClassId { label: p, num_classes });
            }
            if g as usize >= num_classes {
                return Err(Error::InvalidClassId { label: g, num_classes });
            }
            counts[g as usize * num_classes + p as usize] += 1;
        }
        Ok(ConfusionMatrix { num_classes, counts })
    }

    #[inline]
    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    #[inline]
    pub fn count(&self, gt: usize, pred: usize) -> u64 {
        self.counts[gt * self.num_classes + pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn gt_support(&self, class: usize) -> u64 {
        (0..self.num_classes).map(|p| self.count(class, p)).sum()
    }

    pub fn pred_support(&self, class: usize) -> u64 {
        (0..self.num_classes).map(|g| self.count(g, class)).sum()
    }

    /// Rows normalized to percentages (recall on the diagonal); rows with no
    /// ground-truth support are `None`.
    pub fn row_percentages(&self) -> Vec<Option<Vec<f64>>> {
        (0..self.num_classes)
            .map(|g| {
                let support = self.gt_support(g);
                if support == 0 {
                    return None;
                }
                Some(
                    (0..self.num_classes)
                        .map(|p| 100.0 * self.count(g, p) as f64 / support as f64)
                        .collect(),
                )
            })
            .collect()
    }
}

/// The four headline metrics, in percent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegMetrics {
    pub oa: f64,
    pub macc: f64,
    pub macro_f1: f64,
    pub miou: f64,
}

/// Per-class recall / IoU / F1 for the classes with support in gt or pred.
fn per_class(cm: &ConfusionMatrix) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    for k in 0..cm.num_classes() {
        let tp = cm.count(k, k) as f64;
        let gt_n = cm.gt_support(k) as f64;
        let pred_n = cm.pred_support(k) as f64;
        if gt_n == 0.0 && pred_n == 0.0 {
            continue;
        }
        let fn_ = gt_n - tp;
        let fp = pred_n - tp;
        // a class predicted but absent from gt scores zero across the board
        let recall = if gt_n > 0.0 { tp / gt_n } else { 0.0 };
        let iou = if tp + fp + fn_ > 0.0 { tp / (tp + fp + fn_) } else { 0.0 };
        let f1 = if 2.0 * tp + fp + fn_ > 0.0 { 2.0 * tp / (2.0 * tp + fp + fn_) } else { 0.0 };
        out.push((recall, iou, f1));
    }
    out
}

pub fn metrics_from_confusion(cm: &ConfusionMatrix) -> Result<SegMetrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyEvaluation);
    }
    let correct: u64 = (0..cm.num_classes()).map(|k| cm.count(k, k)).sum();
    let classes = per_class(cm);
    let n = classes.len() as f64;
    let (mut macc, mut miou, mut mf1) = (0.0, 0.0, 0.0);
    for (recall, iou, f1) in &classes {
        macc += recall;
        miou += iou;
        mf1 += f1;
    }
    Ok(SegMetrics {
        oa: 100.0 * correct as f64 / total as f64,
        macc: 100.0 * macc / n,
        macro_f1: 100.0 * mf1 / n,
        miou: 100.0 * miou / n,
    })
}

pub fn segmentation_metrics(
    pred: &[ClassId],
    gt: &[ClassId],
    num_classes: usize,
) -> Result<SegMetrics> {
    metrics_from_confusion(&ConfusionMatrix::from_labels(pred, gt, num_classes)?)
}

/// Marks points having a differently-labeled ground-truth neighbor within
/// `radius`. Unlabeled points are never boundary and never make neighbors
/// boundary. A radius of zero yields no boundary points.
pub fn boundary_mask(index: &SpatialIndex, gt: &[ClassId], radius: f64) -> Result<Vec<bool>> {
    if index.len() != gt.len() {
        return Err(Error::LengthMismatch { expected: index.len(), actual: gt.len() });
    }
    let n = gt.len();
    let mut mask = alloc::vec![false; n];
    if radius <= 0.0 {
        return Ok(mask);
    }
    for i in 0..n {
        if gt[i] == UNLABELED {
            continue;
        }
        mask[i] = index.radius_any(index.point(i), radius, |j| {
            let g = gt[j as usize];
            j as usize != i && g != UNLABELED && g != gt[i]
        });
    }
    Ok(mask)
}

/// mIoU over the boundary subset and the inner subset; `None` where a subset
/// is empty.
pub fn split_metrics(
    pred: &[ClassId],
    gt: &[ClassId],
    mask: &[bool],
    num_classes: usize,
) -> Result<(Option<f64>, Option<f64>)> {
    if pred.len() != gt.len() || mask.len() != gt.len() {
        return Err(Error::LengthMismatch { expected: gt.len(), actual: mask.len() });
    }
    let subset = |keep: bool| -> Result<Option<f64>> {
        let p: Vec<ClassId> = (0..gt.len()).filter(|&i| mask[i] == keep).map(|i| pred[i]).collect();
        let g: Vec<ClassId> = (0..gt.len()).filter(|&i| mask[i] == keep).map(|i| gt[i]).collect();
        match segmentation_metrics(&p, &g, num_classes) {
            Ok(m) => Ok(Some(m.miou)),
            Err(Error::EmptyEvaluation) => Ok(None),
            Err(e) => Err(e),
        }
    };
    Ok((subset(true)?, subset(false)?))
}

/// One cloud's inputs to the score-binned accuracy table.
pub struct BinnedCloud<'a> {
    pub pred: &'a [ClassId],
    pub gt: &'a [ClassId],
    pub score: &'a [f64],
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinRow {
    pub lo: f64,
    pub hi: f64,
    /// Total points that fell into the bin, over all clouds.
    pub points: u64,
    /// Clouds that contributed at least one point.
    pub clouds: usize,
    /// Mean of the per-cloud accuracies, percent; `None` for an empty bin.
    pub mean_accuracy: Option<f64>,
    /// Standard error of the per-cloud accuracies; `None` below 2 clouds.
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinTable {
    pub rows: Vec<BinRow>,
}

pub fn uniform_bin_edges(bins: usize) -> Vec<f64> {
    (0..=bins).map(|i| i as f64 / bins as f64).collect()
}

/// Per-bin mean (over clouds) of the hard-label accuracy among points whose
/// object score falls in the bin. The last bin includes its upper edge.
pub fn binned_accuracy(clouds: &[BinnedCloud<'_>], edges: &[f64]) -> Result<BinTable> {
    if edges.len() < 2 {
        return Err(Error::InvalidParameter("need at least two bin edges"));
    }
    if edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("bin edges must be strictly increasing"));
    }
    let bins = edges.len() - 1;
    let mut per_bin_accs: Vec<Vec<f64>> = alloc::vec![Vec::new(); bins];
    let mut per_bin_points = alloc::vec![0u64; bins];

    for cloud in clouds {
        if cloud.pred.len() != cloud.gt.len() || cloud.score.len() != cloud.gt.len() {
            return Err(Error::LengthMismatch {
                expected: cloud.gt.len(),
                actual: cloud.score.len(),
            });
        }
        let mut correct = alloc::vec![0u64; bins];
        let mut total = alloc::vec![0u64; bins];
        for i in 0..cloud.gt.len() {
            if cloud.pred[i] == UNLABELED || cloud.gt[i] == UNLABELED {
                continue;
            }
            let s = cloud.score[i];
            if s < edges[0] || s > edges[bins] {
                continue;
            }
            let b = edges[1..bins].partition_point(|&e| e <= s).min(bins - 1);
            total[b] += 1;
            if cloud.pred[i] == cloud.gt[i] {
                correct[b] += 1;
            }
        }
        for b in 0..bins {
            if total[b] > 0 {
                per_bin_accs[b].push(100.0 * correct[b] as f64 / total[b] as f64);
                per_bin_points[b] += total[b];
            }
        }
    }

    let rows = (0..bins)
        .map(|b| {
            let accs = &per_bin_accs[b];
            let m = accs.len();
            let mean = if m > 0 { Some(accs.iter().sum::<f64>() / m as f64) } else { None };
            let std_error = if m >= 2 {
                let mu = mean.expect("non-empty");
                let var =
                    accs.iter().map(|a| (a - mu) * (a - mu)).sum::<f64>() / (m as f64 - 1.0);
                Some(libm::sqrt(var / m as f64))
            } else {
                None
            };
            BinRow {
                lo: edges[b],
                hi: edges[b + 1],
                points: per_bin_points[b],
                clouds: m,
                mean_accuracy: mean,
                std_error,
            }
        })
        .collect();
    Ok(BinTable { rows })
}

/// Full evaluation of one cloud.
#[derive(Debug, Clone)]
pub struct CloudEval {
    pub metrics: SegMetrics,
    pub miou_boundary: Option<f64>,
    pub miou_inner: Option<f64>,
    /// Percent of gt-valid points carrying a prediction (weak scheme).
    pub pct_labeled: f64,
    pub confusion: ConfusionMatrix,
    pub evaluated_points: u64,
}

pub fn evaluate_cloud(
    index: &SpatialIndex,
    pred: &[ClassId],
    gt: &[ClassId],
    num_classes: usize,
    boundary_radius: f64,
) -> Result<CloudEval> {
    let confusion = ConfusionMatrix::from_labels(pred, gt, num_classes)?;
    let metrics = metrics_from_confusion(&confusion)?;
    let mask = boundary_mask(index, gt, boundary_radius)?;
    let (miou_boundary, miou_inner) = split_metrics(pred, gt, &mask, num_classes)?;
    let gt_valid = gt.iter().filter(|&&g| g != UNLABELED).count();
    let labeled = gt
        .iter()
        .zip(pred)
        .filter(|&(&g, &p)| g != UNLABELED && p != UNLABELED)
        .count();
    Ok(CloudEval {
        metrics,
        miou_boundary,
        miou_inner,
        pct_labeled: if gt_valid > 0 { 100.0 * labeled as f64 / gt_valid as f64 } else { 0.0 },
        confusion,
        evaluated_points: confusion_total(pred, gt),
    })
}

fn confusion_total(pred: &[ClassId], gt: &[ClassId]) -> u64 {
    pred.iter().zip(gt).filter(|&(&p, &g)| p != UNLABELED && g != UNLABELED).count() as u64
}

/// Mean of each metric over the clouds (computed per cloud, then averaged
/// across the set). Boundary metrics average over the clouds where they exist.
#[derive(Debug, Clone, Copy)]
pub struct EvalSummary {
    pub oa: f64,
    pub macc: f64,
    pub macro_f1: f64,
    pub miou: f64,
    pub miou_boundary: Option<f64>,
    pub miou_inner: Option<f64>,
    pub pct_labeled: f64,
    pub clouds: usize,
}

pub fn summarize(per_cloud: &[CloudEval]) -> Result<EvalSummary> {
    if per_cloud.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    let n = per_cloud.len() as f64;
    let mean = |f: &dyn Fn(&CloudEval) -> f64| per_cloud.iter().map(|c| f(c)).sum::<f64>() / n;
    let opt_mean = |f: &dyn Fn(&CloudEval) -> Option<f64>| {
        let vals: Vec<f64> = per_cloud.iter().filter_map(|c| f(c)).collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    };
    Ok(EvalSummary {
        oa: mean(&|c| c.metrics.oa),
        macc: mean(&|c| c.metrics.macc),
        macro_f1: mean(&|c| c.metrics.macro_f1),
        miou: mean(&|c| c.metrics.miou),
        miou_boundary: opt_mean(&|c| c.miou_boundary),
        miou_inner: opt_mean(&|c| c.miou_inner),
        pct_labeled: mean(&|c| c.pct_labeled),
        clouds: per_cloud.len(),
    })
}
