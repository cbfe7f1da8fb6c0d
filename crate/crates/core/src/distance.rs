//! Distance score: maps point-to-mesh distances to [0, 1] through the
//! adaptive threshold t.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::region::RegionScoreField;

/// Floor applied to t so the score stays defined when every mesh-proximal
/// point sits exactly on the surface (max distance 0).
pub const MIN_THRESHOLD: f64 = 1e-9;

/// Distance field for one section: raw distances, the threshold they were
/// scored against, and the resulting scores.
#[derive(Debug, Clone)]
pub struct DistanceScoreField {
    pub distances: Vec<f64>,
    pub threshold: f64,
    pub scores: Vec<f64>,
    /// True when no point had a region score above 0.5 and the percentile
    /// fallback picked t.
    pub fallback: bool,
}

/// t = max { D(p) | R_score(p) > 0.5 }. When no point qualifies, falls back
/// to the 90th percentile (nearest-rank) of all section distances and flags
/// the section.
pub fn adaptive_threshold(distances: &[f64], r_scores: &RegionScoreField) -> Result<(f64, bool)> {
    if distances.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if distances.len() != r_scores.len() {
        return Err(Error::LengthMismatch { expected: distances.len(), actual: r_scores.len() });
    }
    let mut t = f64::NEG_INFINITY;
    for (i, &d) in distances.iter().enumerate() {
        if let Some(r) = r_scores.get(i) {
            if r > 0.5 && d > t {
                t = d;
            }
        }
    }
    if t > f64::NEG_INFINITY {
        return Ok((t.max(MIN_THRESHOLD), false));
    }
    let mut sorted = distances.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = libm::ceil(0.9 * sorted.len() as f64) as usize;
    let t = sorted[rank.saturating_sub(1).min(sorted.len() - 1)];
    Ok((t.max(MIN_THRESHOLD), true))
}

/// The piecewise score: 0 where D > t, otherwise 1 - D/t.
pub fn distance_score(distances: &[f64], t: f64) -> Result<Vec<f64>> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter("distance threshold must be positive"));
    }
    if distances.iter().any(|&d| d < 0.0) {
        return Err(Error::NegativeDistance);
    }
    Ok(distances.iter().map(|&d| if d > t { 0.0 } else { 1.0 - d / t }).collect())
}

/// Convenience composing `adaptive_threshold` and `distance_score`.
pub fn score_distances(
    distances: &[f64],
    r_scores: &RegionScoreField,
) -> Result<DistanceScoreField> {
    let (threshold, fallback) = adaptive_threshold(distances, r_scores)?;
    let scores = distance_score(distances, threshold)?;
    Ok(DistanceScoreField { distances: distances.to_vec(), threshold, scores, fallback })
}
