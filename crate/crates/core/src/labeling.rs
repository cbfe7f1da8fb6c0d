//! Score fusion into the per-point object score c and assembly of the three
//! label schemes (hard, weak, soft).

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::cloud::{ClassId, UNLABELED};
use crate::error::{Error, Result};

/// Reserved id and name of the background class.
pub const BACKGROUND_CLASS: ClassId = 0;
pub const BACKGROUND_NAME: &str = "background";

/// Ordered class names; id 0 is always "background" and model categories map
/// to ids 1.. in order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassRegistry {
    names: Vec<String>,
}

impl ClassRegistry {
    /// Registry from the model categories, in order of first appearance.
    pub fn from_categories<'a, I: IntoIterator<Item = &'a str>>(categories: I) -> Result<Self> {
        let mut names: Vec<String> = alloc::vec![BACKGROUND_NAME.to_string()];
        for cat in categories {
            if cat.is_empty() {
                return Err(Error::InvalidParameter("category names must be non-empty"));
            }
            if cat == BACKGROUND_NAME {
                return Err(Error::ReservedCategory(cat.to_string()));
            }
            if !names.iter().any(|n| n == cat) {
                names.push(cat.to_string());
            }
        }
        Ok(ClassRegistry { names })
    }

    /// Registry from an explicit ordered name list; the first entry must be
    /// "background" and names must be unique.
    pub fn from_names(names: Vec<String>) -> Result<Self> {
        match names.first() {
            Some(first) if first == BACKGROUND_NAME => {}
            _ => return Err(Error::InvalidParameter("first class must be \"background\"")),
        }
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::InvalidParameter("class names must be non-empty"));
            }
            if names[..i].contains(name) {
                return Err(Error::InvalidParameter("class names must be unique"));
            }
        }
        Ok(ClassRegistry { names })
    }

    pub fn resolve(&self, category: &str) -> Result<ClassId> {
        self.names
            .iter()
            .position(|n| n == category)
            .map(|i| i as ClassId)
            .ok_or_else(|| Error::UnknownCategory(category.to_string()))
    }

    pub fn name(&self, id: ClassId) -> Option<&str> {
        self.names.get(id as usize).map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn num_classes(&self) -> usize {
        self.names.len()
    }
}

/// Which scores feed the fused object score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreSubset {
    /// Distance score only.
    Dist,
    /// Distance + region.
    DistReg,
    /// SVM + region.
    SvmReg,
    /// Region + distance + SVM.
    All,
}

impl ScoreSubset {
    pub fn uses_svm(self) -> bool {
        matches!(self, ScoreSubset::SvmReg | ScoreSubset::All)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ScoreSubset::Dist => "dist",
            ScoreSubset::DistReg => "dist+reg",
            ScoreSubset::SvmReg => "svm+reg",
            ScoreSubset::All => "all",
        }
    }

    pub const ALL_SUBSETS: [ScoreSubset; 4] =
        [ScoreSubset::Dist, ScoreSubset::DistReg, ScoreSubset::SvmReg, ScoreSubset::All];
}

impl core::str::FromStr for ScoreSubset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dist" => Ok(ScoreSubset::Dist),
            "dist+reg" => Ok(ScoreSubset::DistReg),
            "svm+reg" => Ok(ScoreSubset::SvmReg),
            "all" => Ok(ScoreSubset::All),
            _ => Err(Error::InvalidParameter("score subset must be one of dist|dist+reg|svm+reg|all")),
        }
    }
}

impl core::fmt::Display for ScoreSubset {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Fused object score: the mean of the scores that are defined for the point
/// under the chosen subset. The distance and SVM scores are always defined;
/// the region score drops out where the point was never assigned a region.
pub fn fuse_scores(
    region: &[Option<f64>],
    distance: &[f64],
    svm: Option<&[f64]>,
    subset: ScoreSubset,
) -> Result<Vec<f64>> {
    let n = distance.len();
    if region.len() != n {
        return Err(Error::LengthMismatch { expected: n, actual: region.len() });
    }
    if subset.uses_svm() {
        match svm {
            Some(s) if s.len() == n => {}
            Some(s) => return Err(Error::LengthMismatch { expected: n, actual: s.len() }),
            None => return Err(Error::InvalidParameter("subset needs SVM scores")),
        }
    }
    let mut fused = Vec::with_capacity(n);
    for i in 0..n {
        let mut sum = 0.0;
        let mut count = 0.0;
        let r = region[i];
        match subset {
            ScoreSubset::Dist => {
                sum += distance[i];
                count += 1.0;
            }
            ScoreSubset::DistReg => {
                sum += distance[i];
                count += 1.0;
                if let Some(r) = r {
                    sum += r;
                    count += 1.0;
                }
            }
            ScoreSubset::SvmReg => {
                sum += svm.expect("validated")[i];
                count += 1.0;
                if let Some(r) = r {
                    sum += r;
                    count += 1.0;
                }
            }
            ScoreSubset::All => {
                sum += distance[i] + svm.expect("validated")[i];
                count += 2.0;
                if let Some(r) = r {
                    sum += r;
                    count += 1.0;
                }
            }
        }
        fused.push(sum / count);
    }
    Ok(fused)
}

/// Label thresholds: background below `hard_threshold`, weak-unlabeled inside
/// the open `weak_band`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelParams {
    pub hard_threshold: f64,
    pub weak_band: (f64, f64),
}

impl Default for LabelParams {
    fn default() -> Self {
        LabelParams { hard_threshold: 0.5, weak_band: (0.25, 0.75) }
    }
}

impl LabelParams {
    /// Thresholds must satisfy 0 <= lo < hard < hi <= 1.
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.weak_band;
        if !(0.0 <= lo && lo < self.hard_threshold && self.hard_threshold < hi && hi <= 1.0) {
            return Err(Error::InvalidParameter(
                "label thresholds must be ordered 0 <= lo < hard < hi <= 1",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelScheme {
    Hard,
    Weak,
    Soft,
}

/// Soft labels: probability `p_target` on the point's target class,
/// `1 - p_target` on background, zero elsewhere.
#[derive(Debug, Clone)]
pub struct SoftLabels {
    pub num_classes: usize,
    pub targets: Vec<ClassId>,
    pub p_target: Vec<f64>,
}

impl SoftLabels {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Dense probability row for point `i`.
    pub fn row(&self, i: usize) -> Vec<f64> {
        let mut row = alloc::vec![0.0; self.num_classes];
        row[self.targets[i] as usize] += self.p_target[i];
        row[BACKGROUND_CLASS as usize] += 1.0 - self.p_target[i];
        row
    }

    /// Argmax class with ties resolved to the target class.
    pub fn argmax(&self, i: usize) -> ClassId {
        if self.p_target[i] >= 0.5 {
            self.targets[i]
        } else {
            BACKGROUND_CLASS
        }
    }
}

/// One labeling of the cloud under a single scheme.
#[derive(Debug, Clone)]
pub enum LabelSet {
    Hard(Vec<ClassId>),
    Weak(Vec<ClassId>),
    Soft(SoftLabels),
}

impl LabelSet {
    pub fn scheme(&self) -> LabelScheme {
        match self {
            LabelSet::Hard(_) => LabelScheme::Hard,
            LabelSet::Weak(_) => LabelScheme::Weak,
            LabelSet::Soft(_) => LabelScheme::Soft,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            LabelSet::Hard(v) | LabelSet::Weak(v) => v.len(),
            LabelSet::Soft(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Builds one label scheme from per-point object scores and target classes.
///
/// Hard: background iff c < hard_threshold, else the target class.
/// Weak: as hard, but UNLABELED inside the open ambiguity band.
/// Soft: probability c on the target class, 1 - c on background.
pub fn assemble_labels(
    c: &[f64],
    targets: &[ClassId],
    registry: &ClassRegistry,
    scheme: LabelScheme,
    params: &LabelParams,
) -> Result<LabelSet> {
    params.validate()?;
    if targets.len() != c.len() {
        return Err(Error::LengthMismatch { expected: c.len(), actual: targets.len() });
    }
    for &t in targets {
        if t == BACKGROUND_CLASS || t as usize >= registry.num_classes() {
            return Err(Error::InvalidClassId { label: t, num_classes: registry.num_classes() });
        }
    }
    if c.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::InvalidParameter("object scores must lie in [0, 1]"));
    }

    let hard = |i: usize| {
        if c[i] < params.hard_threshold {
            BACKGROUND_CLASS
        } else {
            targets[i]
        }
    };
    Ok(match scheme {
        LabelScheme::Hard => LabelSet::Hard((0..c.len()).map(hard).collect()),
        LabelScheme::Weak => LabelSet::Weak(
            (0..c.len())
                .map(|i| {
                    let (lo, hi) = params.weak_band;
                    if c[i] > lo && c[i] < hi {
                        UNLABELED
                    } else {
                        hard(i)
                    }
                })
                .collect(),
        ),
        LabelScheme::Soft => LabelSet::Soft(SoftLabels {
            num_classes: registry.num_classes(),
            targets: targets.to_vec(),
            p_target: c.to_vec(),
        }),
    })
}

/// Cross-scheme invariants: argmax(soft) == hard, weak agrees with hard where
/// labeled, the unlabeled set is exactly the open ambiguity band, and soft
/// rows are probability vectors supported on {target, background}.
pub fn check_scheme_consistency(
    hard: &LabelSet,
    weak: &LabelSet,
    soft: &LabelSet,
    c: &[f64],
    params: &LabelParams,
) -> core::result::Result<(), &'static str> {
    let (LabelSet::Hard(hard), LabelSet::Weak(weak), LabelSet::Soft(soft)) = (hard, weak, soft)
    else {
        return Err("label sets passed in the wrong scheme order");
    };
    if hard.len() != weak.len() || hard.len() != soft.len() || hard.len() != c.len() {
        return Err("scheme lengths disagree");
    }
    let (lo, hi) = params.weak_band;
    for i in 0..hard.len() {
        if soft.argmax(i) != hard[i] {
            return Err("argmax(soft) differs from hard");
        }
        let in_band = c[i] > lo && c[i] < hi;
        if in_band != (weak[i] == UNLABELED) {
            return Err("weak unlabeled set is not the open ambiguity band");
        }
        if weak[i] != UNLABELED && weak[i] != hard[i] {
            return Err("weak label disagrees with hard label");
        }
        let row = soft.row(i);
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err("soft row does not sum to 1");
        }
        if row.iter().any(|&p| p < 0.0) {
            return Err("soft row has a negative entry");
        }
        if row.iter().filter(|&&p| p != 0.0).count() > 2 {
            return Err("soft row has more than two nonzero entries");
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn registry() -> ClassRegistry {
        ClassRegistry::from_categories(["chair", "table", "chair"]).unwrap()
    }

    #[test]
    fn registry_orders_classes_by_first_appearance() {
        let reg = registry();
        assert_eq!(reg.num_classes(), 3);
        assert_eq!(reg.name(0), Some("background"));
        assert_eq!(reg.resolve("chair").unwrap(), 1);
        assert_eq!(reg.resolve("table").unwrap(), 2);
        assert!(matches!(reg.resolve("sofa"), Err(Error::UnknownCategory(_))));
    }

    #[test]
    fn background_category_is_reserved() {
        assert!(matches!(
            ClassRegistry::from_categories(["background"]),
            Err(Error::ReservedCategory(_))
        ));
    }

    #[test]
    fn explicit_name_list_must_start_with_background() {
        assert!(ClassRegistry::from_names(vec!["chair".into()]).is_err());
        assert!(ClassRegistry::from_names(vec!["background".into(), "chair".into()]).is_ok());
        assert!(ClassRegistry::from_names(vec![
            "background".into(),
            "chair".into(),
            "chair".into()
        ])
        .is_err());
    }

    #[test]
    fn fusion_takes_the_mean_of_defined_scores() {
        let region = vec![Some(1.0), Some(0.2), None];
        let distance = vec![1.0, 0.8, 0.4];
        let svm = vec![1.0, 0.5, 0.8];
        let c = fuse_scores(&region, &distance, Some(&svm), ScoreSubset::All).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-15);
        assert!((c[1] - 0.5).abs() < 1e-15);
        assert!((c[2] - 0.6).abs() < 1e-15, "two-score mean where region is undefined");
    }

    #[test]
    fn fusion_subsets_follow_mean_of_available() {
        let region = vec![Some(0.4), None];
        let distance = vec![0.8, 0.8];
        let svm = vec![0.2, 0.2];
        let dist = fuse_scores(&region, &distance, None, ScoreSubset::Dist).unwrap();
        assert_eq!(dist, vec![0.8, 0.8]);
        let dist_reg = fuse_scores(&region, &distance, None, ScoreSubset::DistReg).unwrap();
        assert!((dist_reg[0] - 0.6).abs() < 1e-15);
        assert_eq!(dist_reg[1], 0.8);
        let svm_reg = fuse_scores(&region, &distance, Some(&svm), ScoreSubset::SvmReg).unwrap();
        assert!((svm_reg[0] - 0.3).abs() < 1e-15);
        assert_eq!(svm_reg[1], 0.2);
    }

    #[test]
    fn svm_subset_without_svm_scores_is_an_error() {
        assert!(fuse_scores(&[None], &[0.5], None, ScoreSubset::All).is_err());
    }

    #[test]
    fn label_examples_from_all_three_schemes() {
        let reg = registry();
        let c = [0.9, 0.5, 0.1];
        let targets = [1u16, 1, 1]; // chair
        let params = LabelParams::default();
        let LabelSet::Hard(hard) =
            assemble_labels(&c, &targets, &reg, LabelScheme::Hard, &params).unwrap()
        else {
            unreachable!()
        };
        let LabelSet::Weak(weak) =
            assemble_labels(&c, &targets, &reg, LabelScheme::Weak, &params).unwrap()
        else {
            unreachable!()
        };
        let LabelSet::Soft(soft) =
            assemble_labels(&c, &targets, &reg, LabelScheme::Soft, &params).unwrap()
        else {
            unreachable!()
        };
        let rows_close = |got: alloc::vec::Vec<f64>, want: [f64; 3]| {
            got.iter().zip(want).all(|(g, w)| (g - w).abs() < 1e-12)
        };
        // c = 0.9: chair everywhere, soft (0.9, 0.1)
        assert_eq!(hard[0], 1);
        assert_eq!(weak[0], 1);
        assert!(rows_close(soft.row(0), [0.1, 0.9, 0.0]));
        // c = 0.5: hard chair (rule is background iff c < 0.5), weak unlabeled
        assert_eq!(hard[1], 1);
        assert_eq!(weak[1], UNLABELED);
        assert!(rows_close(soft.row(1), [0.5, 0.5, 0.0]));
        // c = 0.1: background everywhere (0.1 <= 0.25 stays labeled in weak)
        assert_eq!(hard[2], 0);
        assert_eq!(weak[2], 0);
        assert!(rows_close(soft.row(2), [0.9, 0.1, 0.0]));
    }

    #[test]
    fn band_edges_stay_labeled_in_the_weak_scheme() {
        let reg = registry();
        let c = [0.25, 0.75, 0.250000001, 0.749999999];
        let targets = [1u16; 4];
        let params = LabelParams::default();
        let LabelSet::Weak(weak) =
            assemble_labels(&c, &targets, &reg, LabelScheme::Weak, &params).unwrap()
        else {
            unreachable!()
        };
        assert_eq!(weak[0], 0, "c = 0.25 is labeled (band is open)");
        assert_eq!(weak[1], 1, "c = 0.75 is labeled (band is open)");
        assert_eq!(weak[2], UNLABELED);
        assert_eq!(weak[3], UNLABELED);
    }

    #[test]
    fn scheme_consistency_holds_on_random_scores() {
        let reg = registry();
        let c: Vec<f64> = (0..1000).map(|i| (i as f64) / 999.0).collect();
        let targets: Vec<ClassId> = (0..1000).map(|i| 1 + (i % 2) as u16).collect();
        let params = LabelParams::default();
        let hard = assemble_labels(&c, &targets, &reg, LabelScheme::Hard, &params).unwrap();
        let weak = assemble_labels(&c, &targets, &reg, LabelScheme::Weak, &params).unwrap();
        let soft = assemble_labels(&c, &targets, &reg, LabelScheme::Soft, &params).unwrap();
        check_scheme_consistency(&hard, &weak, &soft, &c, &params).unwrap();
    }

    #[test]
    fn background_target_is_rejected() {
        let reg = registry();
        let err =
            assemble_labels(&[0.5], &[0], &reg, LabelScheme::Hard, &LabelParams::default())
                .unwrap_err();
        assert!(matches!(err, Error::InvalidClassId { .. }));
    }

    #[test]
    fn disordered_thresholds_are_rejected() {
        let params = LabelParams { hard_threshold: 0.2, weak_band: (0.25, 0.75) };
        assert!(params.validate().is_err());
        let params = LabelParams { hard_threshold: 0.5, weak_band: (0.6, 0.75) };
        assert!(params.validate().is_err());
    }

    #[test]
    fn subset_parsing_round_trips() {
        for subset in ScoreSubset::ALL_SUBSETS {
            assert_eq!(subset.as_str().parse::<ScoreSubset>().unwrap(), subset);
        }
        assert!("dist+svm".parse::<ScoreSubset>().is_err());
    }
}
