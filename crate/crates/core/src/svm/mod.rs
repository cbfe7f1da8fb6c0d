//! Weighted binary C-SVM with RBF kernel, trained per section, with
//! Platt-calibrated probabilistic output.
//!
//! Training data comes from four point sets: uniform mesh surface samples and
//! mesh-proximal scan points form the object class, low-region-score points
//! and points outside the 1.5x-scaled mesh hull form the background class.

mod platt;
mod smo;

pub use platt::{fit_sigmoid, negative_log_likelihood, smoothed_targets, PlattParams};

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::hull::ConvexHull3;
use crate::math::{mix_seed, Point3};
use crate::mesh::TriangleMesh;
use crate::region::RegionScoreField;

/// Where a training sample came from; fixes its class and weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleSource {
    /// Uniform sample from the mesh surface (object, w = 10).
    MeshSampled,
    /// Scan point nearest to a mesh foot point (object, w = 5).
    MeshProximal,
    /// Scan point with region score below 0.25 (background, w = 1).
    LowRegionScore,
    /// Scan point outside the scaled mesh hull (background, w = 10).
    OutsideHullMargin,
}

impl SampleSource {
    #[inline]
    pub fn weight(self) -> f64 {
        match self {
            SampleSource::MeshSampled => 10.0,
            SampleSource::MeshProximal => 5.0,
            SampleSource::LowRegionScore => 1.0,
            SampleSource::OutsideHullMargin => 10.0,
        }
    }

    #[inline]
    pub fn is_object(self) -> bool {
        matches!(self, SampleSource::MeshSampled | SampleSource::MeshProximal)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrainingSample {
    pub position: Point3,
    pub is_object: bool,
    pub weight: f64,
    pub source: SampleSource,
}

/// Training set with provenance; each class holds at most the configured cap.
#[derive(Debug, Clone)]
pub struct WeightedTrainingSet {
    pub samples: Vec<TrainingSample>,
    /// True when the background class was empty and the farthest-5% fallback
    /// filled it.
    pub background_fallback: bool,
}

impl WeightedTrainingSet {
    pub fn class_counts(&self) -> (usize, usize) {
        let obj = self.samples.iter().filter(|s| s.is_object).count();
        (obj, self.samples.len() - obj)
    }
}

/// Knobs for training-set construction.
#[derive(Debug, Clone, Copy)]
pub struct TrainingParams {
    /// Per-class sample cap after subsampling.
    pub per_class_cap: usize,
    /// Number of uniform mesh surface samples.
    pub surface_samples: usize,
    /// Region score below which a point is a background candidate.
    pub low_region_threshold: f64,
    /// Fraction of the section (by largest distance) used when the
    /// background class comes up empty.
    pub fallback_fraction: f64,
}

impl Default for TrainingParams {
    fn default() -> Self {
        TrainingParams {
            per_class_cap: 1000,
            surface_samples: 1000,
            low_region_threshold: 0.25,
            fallback_fraction: 0.05,
        }
    }
}

fn position_key(p: Point3) -> (u64, u64, u64) {
    (p.x.to_bits(), p.y.to_bits(), p.z.to_bits())
}

/// Deterministic subsample to `cap`: seeded shuffle, truncate, and restore
/// candidate order.
fn subsample(candidates: &mut Vec<TrainingSample>, cap: usize, seed: u64) {
    if candidates.len() <= cap {
        return;
    }
    let mut order: Vec<u32> = (0..candidates.len() as u32).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    order.truncate(cap);
    order.sort_unstable();
    *candidates = order.iter().map(|&i| candidates[i as usize]).collect();
}

/// Builds the per-section training set.
///
/// `proximal` indexes the section points nearest to the mesh (P_closest),
/// `h_mesh` is the mesh hull scaled by the margin factor, and `distances`
/// are the per-point section distances (used only by the background
/// fallback).
pub fn build_training_set(
    section: &PointCloud,
    world_mesh: &TriangleMesh,
    proximal: &[u32],
    r_scores: &RegionScoreField,
    h_mesh: &ConvexHull3,
    distances: &[f64],
    params: &TrainingParams,
    seed: u64,
) -> Result<WeightedTrainingSet> {
    if section.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if r_scores.len() != section.len() || distances.len() != section.len() {
        return Err(Error::LengthMismatch { expected: section.len(), actual: r_scores.len() });
    }

    // object candidates; exact duplicates keep the higher weight
    let mut object: Vec<TrainingSample> = Vec::new();
    let mut seen: BTreeMap<(u64, u64, u64), usize> = BTreeMap::new();
    for p in world_mesh.sample_surface(params.surface_samples, mix_seed(seed, 1))? {
        let key = position_key(p);
        if seen.contains_key(&key) {
            continue;
        }
        seen.insert(key, object.len());
        object.push(TrainingSample {
            position: p,
            is_object: true,
            weight: SampleSource::MeshSampled.weight(),
            source: SampleSource::MeshSampled,
        });
    }
    for &i in proximal {
        let p = section.point(i as usize);
        let key = position_key(p);
        if seen.contains_key(&key) {
            continue; // already present with weight >= 5
        }
        seen.insert(key, object.len());
        object.push(TrainingSample {
            position: p,
            is_object: true,
            weight: SampleSource::MeshProximal.weight(),
            source: SampleSource::MeshProximal,
        });
    }

    // background candidates: outside the margin hull dominates low region score
    let mut background: Vec<TrainingSample> = Vec::new();
    for i in 0..section.len() {
        let p = section.point(i);
        if !h_mesh.contains(p) {
            background.push(TrainingSample {
                position: p,
                is_object: false,
                weight: SampleSource::OutsideHullMargin.weight(),
                source: SampleSource::OutsideHullMargin,
            });
        } else if r_scores.get(i).is_some_and(|r| r < params.low_region_threshold) {
            background.push(TrainingSample {
                position: p,
                is_object: false,
                weight: SampleSource::LowRegionScore.weight(),
                source: SampleSource::LowRegionScore,
            });
        }
    }
    let mut background_fallback = false;
    if background.is_empty() {
        background_fallback = true;
        let take = ((section.len() as f64 * params.fallback_fraction) as usize).max(1);
        let mut by_dist: Vec<u32> = (0..section.len() as u32).collect();
        by_dist.sort_by(|&a, &b| {
            distances[b as usize].total_cmp(&distances[a as usize]).then(a.cmp(&b))
        });
        by_dist.truncate(take);
        by_dist.sort_unstable();
        for &i in &by_dist {
            background.push(TrainingSample {
                position: section.point(i as usize),
                is_object: false,
                weight: SampleSource::LowRegionScore.weight(),
                source: SampleSource::LowRegionScore,
            });
        }
    }

    subsample(&mut object, params.per_class_cap, mix_seed(seed, 2));
    subsample(&mut background, params.per_class_cap, mix_seed(seed, 3));

    if object.is_empty() {
        return Err(Error::EmptyTrainingClass { class: "object" });
    }
    if background.is_empty() {
        return Err(Error::EmptyTrainingClass { class: "background" });
    }

    let mut samples = object;
    samples.extend(background);
    Ok(WeightedTrainingSet { samples, background_fallback })
}

/// Centering + bounding-sphere normalization applied before the kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureScaler {
    pub center: Point3,
    pub radius: f64,
}

impl FeatureScaler {
    /// Center = centroid, radius = max distance from it (floored at 1e-9).
    pub fn from_points(points: &[Point3]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let mut center = Point3::ZERO;
        for &p in points {
            center += p;
        }
        center = center / points.len() as f64;
        let radius = points.iter().map(|&p| p.dist(center)).fold(0.0, f64::max).max(1e-9);
        Ok(FeatureScaler { center, radius })
    }

    #[inline]
    pub fn apply(&self, p: Point3) -> Point3 {
        (p - self.center) / self.radius
    }
}

/// SVM hyperparameters.
#[derive(Debug, Clone, Copy)]
pub struct SvmParams {
    /// Base regularization; the effective bound per sample is C * w.
    pub c: f64,
    /// Kernel width; `None` picks 1/(3 * mean per-axis feature variance).
    pub gamma: Option<f64>,
    /// KKT gap below which SMO stops.
    pub tol: f64,
    /// Cap on SMO pair updates.
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams { c: 1.0, gamma: None, tol: 1e-3, max_iter: 200_000 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SupportVector {
    /// World-frame position.
    pub position: Point3,
    pub alpha: f64,
    /// +1 object, -1 background.
    pub label: f64,
    pub weight: f64,
}

/// Fitted (and optionally calibrated) section classifier.
#[derive(Debug, Clone)]
pub struct SvmModel {
    pub support: Vec<SupportVector>,
    support_scaled: Vec<Point3>,
    pub bias: f64,
    pub gamma: f64,
    pub scaler: FeatureScaler,
    pub platt: Option<PlattParams>,
    pub converged: bool,
    pub iterations: usize,
    /// Final KKT gap (m - M) when SMO stopped.
    pub kkt_gap: f64,
}

impl SvmModel {
    /// Uncalibrated decision value; positive means object side.
    pub fn decision(&self, p: Point3) -> f64 {
        let x = self.scaler.apply(p);
        let mut f = self.bias;
        for (sv, &sx) in self.support.iter().zip(&self.support_scaled) {
            f += sv.alpha * sv.label * libm::exp(-self.gamma * sx.dist_squared(x));
        }
        f
    }

    /// Platt probability of the object class.
    pub fn probability(&self, p: Point3) -> Result<f64> {
        let platt = self.platt.ok_or(Error::Uncalibrated)?;
        Ok(platt.probability(self.decision(p)))
    }

    /// Dual objective sum(a) - 1/2 a'Qa, computable from the support vectors
    /// alone (zero alphas contribute nothing).
    pub fn dual_objective(&self) -> f64 {
        let mut linear = 0.0;
        let mut quad = 0.0;
        for (i, (svi, &xi)) in self.support.iter().zip(&self.support_scaled).enumerate() {
            linear += svi.alpha;
            for (svj, &xj) in self.support.iter().zip(&self.support_scaled).skip(i + 1) {
                quad += 2.0
                    * svi.alpha
                    * svj.alpha
                    * svi.label
                    * svj.label
                    * libm::exp(-self.gamma * xi.dist_squared(xj));
            }
            quad += svi.alpha * svi.alpha;
        }
        linear - 0.5 * quad
    }
}

/// Fits the weighted C-SVM by SMO. `scaler` should come from the section's
/// points so the kernel sees scale-free coordinates.
pub fn fit_svm(
    ts: &WeightedTrainingSet,
    scaler: FeatureScaler,
    params: &SvmParams,
) -> Result<SvmModel> {
    let (obj, bg) = ts.class_counts();
    if obj == 0 {
        return Err(Error::EmptyTrainingClass { class: "object" });
    }
    if bg == 0 {
        return Err(Error::EmptyTrainingClass { class: "background" });
    }
    if !(params.c > 0.0) {
        return Err(Error::InvalidParameter("C must be positive"));
    }
    if params.gamma.is_some_and(|g| !(g > 0.0)) {
        return Err(Error::InvalidParameter("gamma must be positive"));
    }

    let x: Vec<Point3> = ts.samples.iter().map(|s| scaler.apply(s.position)).collect();
    let y: Vec<f64> = ts.samples.iter().map(|s| if s.is_object { 1.0 } else { -1.0 }).collect();
    let c: Vec<f64> = ts.samples.iter().map(|s| params.c * s.weight).collect();

    let gamma = params.gamma.unwrap_or_else(|| {
        let n = x.len() as f64;
        let mut mean = Point3::ZERO;
        for &p in &x {
            mean += p;
        }
        mean = mean / n;
        let var: f64 = x.iter().map(|&p| p.dist_squared(mean)).sum::<f64>() / n / 3.0;
        if var > 1e-12 {
            1.0 / (3.0 * var)
        } else {
            1.0
        }
    });

    let sol = smo::solve(&x, &y, &c, gamma, params.tol, params.max_iter);

    let mut support = Vec::new();
    let mut support_scaled = Vec::new();
    for (i, sample) in ts.samples.iter().enumerate() {
        if sol.alpha[i] > 1e-12 {
            support.push(SupportVector {
                position: sample.position,
                alpha: sol.alpha[i],
                label: y[i],
                weight: sample.weight,
            });
            support_scaled.push(x[i]);
        }
    }

    Ok(SvmModel {
        support,
        support_scaled,
        bias: -sol.rho,
        gamma,
        scaler,
        platt: None,
        converged: sol.converged,
        iterations: sol.iterations,
        kkt_gap: sol.gap,
    })
}

/// Fits the Platt sigmoid over the training decision values and returns the
/// parameters (they are not stored on `model`; see `calibrated`).
pub fn platt_calibrate(model: &SvmModel, ts: &WeightedTrainingSet) -> PlattParams {
    let decision: Vec<f64> = ts.samples.iter().map(|s| model.decision(s.position)).collect();
    let labels: Vec<bool> = ts.samples.iter().map(|s| s.is_object).collect();
    fit_sigmoid(&decision, &labels)
}

/// Convenience: fit, calibrate, and return the ready-to-score model.
pub fn fit_and_calibrate(
    ts: &WeightedTrainingSet,
    scaler: FeatureScaler,
    params: &SvmParams,
) -> Result<SvmModel> {
    let mut model = fit_svm(ts, scaler, params)?;
    model.platt = Some(platt_calibrate(&model, ts));
    Ok(model)
}

/// Calibrated object probability for every point.
pub fn svm_score(model: &SvmModel, points: &[Point3]) -> Result<Vec<f64>> {
    if model.platt.is_none() {
        return Err(Error::Uncalibrated);
    }
    points.iter().map(|&p| model.probability(p)).collect()
}
