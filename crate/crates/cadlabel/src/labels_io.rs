//! Label output formats.
//!
//! Hard/weak labels: binary little-endian PLY with double x/y/z, uint16
//! "label" (65535 = unlabeled in the weak scheme) and float32 "score" (the
//! object score c), plus a sidecar class-name list (one name per line).
//!
//! Soft labels (.slbl, all little-endian): magic "SLBL", version u32 (= 1),
//! point count u64, class count u32, then per class a u32 name length and the
//! UTF-8 name bytes, then point-major float32 rows of class probabilities.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use cadlabel_core::cloud::ClassId;
use cadlabel_core::labeling::{ClassRegistry, SoftLabels};
use cadlabel_core::math::Point3;
use cadlabel_core::svm::SvmModel;

use crate::ply::{write_cloud_ply, CloudColumns};

pub const SOFT_MAGIC: &[u8; 4] = b"SLBL";
pub const SOFT_VERSION: u32 = 1;

pub fn write_label_ply(
    path: &Path,
    points: &[Point3],
    labels: &[ClassId],
    scores: &[f64],
) -> Result<()> {
    write_cloud_ply(
        path,
        points,
        &CloudColumns { labels: Some(labels), scores: Some(scores), ..Default::default() },
    )
}

pub fn write_classes_txt(path: &Path, registry: &ClassRegistry) -> Result<()> {
    let mut text = String::new();
    for name in registry.names() {
        text.push_str(name);
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_classes_txt(path: &Path) -> Result<ClassRegistry> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let names: Vec<String> = text.lines().map(str::to_string).filter(|l| !l.is_empty()).collect();
    ClassRegistry::from_names(names).map_err(|e| anyhow!("{}: {e}", path.display()))
}

pub fn write_soft_labels(path: &Path, soft: &SoftLabels, registry: &ClassRegistry) -> Result<()> {
    if registry.num_classes() != soft.num_classes {
        bail!("registry has {} classes but soft labels carry {}", registry.num_classes(), soft.num_classes);
    }
    let mut out: Vec<u8> = Vec::with_capacity(16 + soft.len() * soft.num_classes * 4);
    out.extend_from_slice(SOFT_MAGIC);
    out.extend_from_slice(&SOFT_VERSION.to_le_bytes());
    out.extend_from_slice(&(soft.len() as u64).to_le_bytes());
    out.extend_from_slice(&(soft.num_classes as u32).to_le_bytes());
    for name in registry.names() {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
    }
    for i in 0..soft.len() {
        for p in soft.row(i) {
            out.extend_from_slice(&(p as f32).to_le_bytes());
        }
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Parsed .slbl content: class names and point-major probability rows.
#[derive(Debug)]
pub struct SoftLabelFile {
    pub class_names: Vec<String>,
    pub rows: Vec<Vec<f32>>,
}

pub fn read_soft_labels(path: &Path) -> Result<SoftLabelFile> {
    let data = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cursor = 0usize;
    let take = |cursor: &mut usize, n: usize| -> Result<&[u8]> {
        let slice = data
            .get(*cursor..*cursor + n)
            .ok_or_else(|| anyhow!("{}: truncated at offset {}", path.display(), cursor))?;
        *cursor += n;
        Ok(slice)
    };
    if take(&mut cursor, 4)? != SOFT_MAGIC {
        bail!("{}: not a soft-label file (bad magic)", path.display());
    }
    let version = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap());
    if version != SOFT_VERSION {
        bail!("{}: unsupported soft-label version {version}", path.display());
    }
    let points = u64::from_le_bytes(take(&mut cursor, 8)?.try_into().unwrap()) as usize;
    let classes = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap()) as usize;
    let mut class_names = Vec::with_capacity(classes);
    for _ in 0..classes {
        let len = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap()) as usize;
        let name = std::str::from_utf8(take(&mut cursor, len)?)
            .with_context(|| format!("{}: class name is not UTF-8", path.display()))?;
        class_names.push(name.to_string());
    }
    let mut rows = Vec::with_capacity(points);
    for _ in 0..points {
        let mut row = Vec::with_capacity(classes);
        for _ in 0..classes {
            row.push(f32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap()));
        }
        rows.push(row);
    }
    Ok(SoftLabelFile { class_names, rows })
}

/// Debug CSV mirror of the soft labels, one row per point.
pub fn write_soft_csv(path: &Path, soft: &SoftLabels, registry: &ClassRegistry) -> Result<()> {
    let mut out = String::new();
    out.push_str(&registry.names().join(","));
    out.push('\n');
    for i in 0..soft.len() {
        let row = soft.row(i);
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            out.push_str(&format!("{v}"));
            first = false;
        }
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Human-inspectable SVM dump: one header block, then one support vector per
/// line (x y z alpha label weight).
pub fn write_svm_dump(path: &Path, model: &SvmModel, section: usize) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("# cadlabel svm model, section {section}\n"));
    out.push_str(&format!("gamma {}\n", model.gamma));
    out.push_str(&format!("bias {}\n", model.bias));
    if let Some(platt) = model.platt {
        out.push_str(&format!("platt_a {}\nplatt_b {}\n", platt.a, platt.b));
    }
    out.push_str(&format!("scaler_center {} {} {}\n", model.scaler.center.x, model.scaler.center.y, model.scaler.center.z));
    out.push_str(&format!("scaler_radius {}\n", model.scaler.radius));
    out.push_str(&format!("converged {}\n", model.converged));
    out.push_str(&format!("support_vectors {}\n", model.support.len()));
    for sv in &model.support {
        out.push_str(&format!(
            "{} {} {} {} {} {}\n",
            sv.position.x, sv.position.y, sv.position.z, sv.alpha, sv.label, sv.weight
        ));
    }
    let mut file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    file.write_all(out.as_bytes())?;
    Ok(())
}
