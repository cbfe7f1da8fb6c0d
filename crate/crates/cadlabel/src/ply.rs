//! PLY reading and writing (ASCII and binary little-endian).
//!
//! Clouds need x/y/z (float or double) and may carry nx/ny/nz, a uint16
//! "label", and a float32 "score". Meshes need a vertex element plus a face
//! element with a vertex-index list. Unknown elements and properties are
//! skipped.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use cadlabel_core::cloud::ClassId;
use cadlabel_core::math::Point3;
use cadlabel_core::mesh::TriangleMesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(s: &str) -> Option<Scalar> {
        Some(match s {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }
}

#[derive(Debug, Clone)]
enum PropertyKind {
    Scalar(Scalar),
    List { count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Property {
    name: String,
    kind: PropertyKind,
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

struct Header {
    format: Format,
    elements: Vec<Element>,
    body_offset: usize,
}

fn take_line(data: &[u8], offset: &mut usize, line_no: &mut usize, path: &Path) -> Result<String> {
    let start = *offset;
    while *offset < data.len() && data[*offset] != b'\n' {
        *offset += 1;
    }
    if *offset >= data.len() {
        bail!("{}: unexpected end of header", path.display());
    }
    let line =
        String::from_utf8_lossy(&data[start..*offset]).trim_end_matches('\r').trim().to_string();
    *offset += 1;
    *line_no += 1;
    Ok(line)
}

fn parse_header(data: &[u8], path: &Path) -> Result<Header> {
    let mut offset = 0usize;
    let mut line_no = 0usize;

    let magic = take_line(data, &mut offset, &mut line_no, path)?;
    if magic != "ply" {
        bail!("{}:1: not a PLY file (missing magic)", path.display());
    }
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let line = take_line(data, &mut offset, &mut line_no, path)?;
        let err = |msg: &str| anyhow!("{}:{}: {} in {:?}", path.display(), line_no, msg, line);
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("comment") | Some("obj_info") | None => {}
            Some("format") => {
                format = Some(match tok.next() {
                    Some("ascii") => Format::Ascii,
                    Some("binary_little_endian") => Format::BinaryLittleEndian,
                    Some(other) => bail!(err(&format!("unsupported format {other:?}"))),
                    None => bail!(err("missing format")),
                });
            }
            Some("element") => {
                let name = tok.next().ok_or_else(|| err("missing element name"))?.to_string();
                let count: usize =
                    tok.next().ok_or_else(|| err("missing element count"))?.parse().map_err(|_| err("bad element count"))?;
                elements.push(Element { name, count, properties: Vec::new() });
            }
            Some("property") => {
                let element = elements.last_mut().ok_or_else(|| err("property before element"))?;
                let first = tok.next().ok_or_else(|| err("missing property type"))?;
                if first == "list" {
                    let count = Scalar::parse(tok.next().ok_or_else(|| err("missing list count type"))?)
                        .ok_or_else(|| err("unknown list count type"))?;
                    let item = Scalar::parse(tok.next().ok_or_else(|| err("missing list item type"))?)
                        .ok_or_else(|| err("unknown list item type"))?;
                    let name = tok.next().ok_or_else(|| err("missing property name"))?.to_string();
                    element.properties.push(Property { name, kind: PropertyKind::List { count, item } });
                } else {
                    let scalar = Scalar::parse(first).ok_or_else(|| err("unknown property type"))?;
                    let name = tok.next().ok_or_else(|| err("missing property name"))?.to_string();
                    element.properties.push(Property { name, kind: PropertyKind::Scalar(scalar) });
                }
            }
            Some("end_header") => break,
            Some(other) => bail!(err(&format!("unknown header keyword {other:?}"))),
        }
    }
    let format = format.ok_or_else(|| anyhow!("{}: header has no format line", path.display()))?;
    Ok(Header { format, elements, body_offset: offset })
}

enum Body<'a> {
    Binary { data: &'a [u8], cursor: usize },
    Ascii { tokens: std::str::SplitAsciiWhitespace<'a>, line_hint: usize },
}

impl<'a> Body<'a> {
    fn scalar(&mut self, kind: Scalar, path: &Path) -> Result<f64> {
        match self {
            Body::Binary { data, cursor } => {
                let size = kind.size();
                let bytes = data
                    .get(*cursor..*cursor + size)
                    .ok_or_else(|| anyhow!("{}: binary body truncated at offset {}", path.display(), cursor))?;
                *cursor += size;
                Ok(match kind {
                    Scalar::I8 => bytes[0] as i8 as f64,
                    Scalar::U8 => bytes[0] as f64,
                    Scalar::I16 => i16::from_le_bytes([bytes[0], bytes[1]]) as f64,
                    Scalar::U16 => u16::from_le_bytes([bytes[0], bytes[1]]) as f64,
                    Scalar::I32 => i32::from_le_bytes(bytes.try_into().unwrap()) as f64,
                    Scalar::U32 => u32::from_le_bytes(bytes.try_into().unwrap()) as f64,
                    Scalar::F32 => f32::from_le_bytes(bytes.try_into().unwrap()) as f64,
                    Scalar::F64 => f64::from_le_bytes(bytes.try_into().unwrap()),
                })
            }
            Body::Ascii { tokens, line_hint } => {
                let tok = tokens
                    .next()
                    .ok_or_else(|| anyhow!("{}: ascii body ended early (around record {})", path.display(), line_hint))?;
                tok.parse::<f64>()
                    .map_err(|_| anyhow!("{}: malformed ascii value {:?} (around record {})", path.display(), tok, line_hint))
            }
        }
    }
}

/// Which vertex columns a cloud file provided.
#[derive(Debug)]
pub struct CloudFile {
    pub points: Vec<Point3>,
    pub normals: Option<Vec<Point3>>,
    pub labels: Option<Vec<ClassId>>,
    pub scores: Option<Vec<f32>>,
    pub sections: Option<Vec<u16>>,
}

fn parse_body<OnVertex, OnFace>(
    data: &[u8],
    path: &Path,
    mut on_vertex: OnVertex,
    mut on_face: OnFace,
) -> Result<()>
where
    OnVertex: FnMut(&Element, &[f64]),
    OnFace: FnMut(&[u32]) -> Result<()>,
{
    let header = parse_header(data, path)?;
    let mut body = match header.format {
        Format::BinaryLittleEndian => Body::Binary { data, cursor: header.body_offset },
        Format::Ascii => Body::Ascii {
            tokens: std::str::from_utf8(&data[header.body_offset..])
                .with_context(|| format!("{}: ascii body is not UTF-8", path.display()))?
                .split_ascii_whitespace(),
            line_hint: 0,
        },
    };

    let mut values: Vec<f64> = Vec::new();
    let mut list: Vec<u32> = Vec::new();
    for element in &header.elements {
        let is_vertex = element.name == "vertex";
        let is_face = element.name == "face";
        for record in 0..element.count {
            if let Body::Ascii { line_hint, .. } = &mut body {
                *line_hint = record;
            }
            values.clear();
            list.clear();
            for property in &element.properties {
                match property.kind {
                    PropertyKind::Scalar(kind) => values.push(body.scalar(kind, path)?),
                    PropertyKind::List { count, item } => {
                        let n = body.scalar(count, path)? as usize;
                        for _ in 0..n {
                            let v = body.scalar(item, path)?;
                            if is_face && (property.name == "vertex_indices" || property.name == "vertex_index") {
                                if v < 0.0 {
                                    bail!("{}: negative vertex index in face {record}", path.display());
                                }
                                list.push(v as u32);
                            }
                        }
                    }
                }
            }
            if is_vertex {
                on_vertex(element, &values);
            } else if is_face && !list.is_empty() {
                on_face(&list)?;
            }
        }
    }
    Ok(())
}

fn scalar_column(element: &Element, name: &str) -> Option<usize> {
    // index into the flattened scalar values of one record
    let mut idx = 0;
    for p in &element.properties {
        match p.kind {
            PropertyKind::Scalar(_) => {
                if p.name == name {
                    return Some(idx);
                }
                idx += 1;
            }
            PropertyKind::List { .. } => {}
        }
    }
    None
}

/// Reads a point cloud: x/y/z required, nx/ny/nz + label + score + section
/// picked up when present.
pub fn read_cloud_ply(path: &Path) -> Result<CloudFile> {
    let data = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let header = parse_header(&data, path)?;
    let vertex = header
        .elements
        .iter()
        .find(|e| e.name == "vertex")
        .ok_or_else(|| anyhow!("{}: no vertex element", path.display()))?;
    let x = scalar_column(vertex, "x");
    let y = scalar_column(vertex, "y");
    let z = scalar_column(vertex, "z");
    let (Some(x), Some(y), Some(z)) = (x, y, z) else {
        bail!("{}: vertex element lacks x/y/z properties", path.display());
    };
    let nx = scalar_column(vertex, "nx");
    let ny = scalar_column(vertex, "ny");
    let nz = scalar_column(vertex, "nz");
    let label = scalar_column(vertex, "label");
    let score = scalar_column(vertex, "score");
    let section = scalar_column(vertex, "section");
    let has_normals = nx.is_some() && ny.is_some() && nz.is_some();

    let mut out = CloudFile {
        points: Vec::with_capacity(vertex.count),
        normals: has_normals.then(|| Vec::with_capacity(vertex.count)),
        labels: label.map(|_| Vec::with_capacity(vertex.count)),
        scores: score.map(|_| Vec::with_capacity(vertex.count)),
        sections: section.map(|_| Vec::with_capacity(vertex.count)),
    };
    let mut bad_label = None;
    parse_body(
        &data,
        path,
        |element, values| {
            if element.name != "vertex" {
                return;
            }
            out.points.push(Point3::new(values[x], values[y], values[z]));
            if let Some(normals) = &mut out.normals {
                normals.push(Point3::new(
                    values[nx.unwrap()],
                    values[ny.unwrap()],
                    values[nz.unwrap()],
                ));
            }
            if let Some(labels) = &mut out.labels {
                let v = values[label.unwrap()];
                if !(0.0..=65535.0).contains(&v) || v.fract() != 0.0 {
                    bad_label.get_or_insert(v);
                    labels.push(0);
                } else {
                    labels.push(v as u16);
                }
            }
            if let Some(scores) = &mut out.scores {
                scores.push(values[score.unwrap()] as f32);
            }
            if let Some(sections) = &mut out.sections {
                sections.push(values[section.unwrap()] as u16);
            }
        },
        |_| Ok(()),
    )?;
    if let Some(v) = bad_label {
        bail!("{}: label value {v} does not fit uint16", path.display());
    }
    Ok(out)
}

/// Reads a triangle mesh; faces with more than 3 vertices are
/// fan-triangulated.
pub fn read_mesh_ply(path: &Path) -> Result<TriangleMesh> {
    let data = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let header = parse_header(&data, path)?;
    let vertex = header
        .elements
        .iter()
        .find(|e| e.name == "vertex")
        .ok_or_else(|| anyhow!("{}: no vertex element", path.display()))?;
    let (Some(x), Some(y), Some(z)) =
        (scalar_column(vertex, "x"), scalar_column(vertex, "y"), scalar_column(vertex, "z"))
    else {
        bail!("{}: vertex element lacks x/y/z properties", path.display());
    };
    let mut vertices = Vec::with_capacity(vertex.count);
    let mut triangles = Vec::new();
    parse_body(
        &data,
        path,
        |element, values| {
            if element.name == "vertex" {
                vertices.push(Point3::new(values[x], values[y], values[z]));
            }
        },
        |indices| {
            if indices.len() < 3 {
                bail!("{}: face with fewer than 3 vertices", path.display());
            }
            for k in 1..indices.len() - 1 {
                triangles.push([indices[0], indices[k], indices[k + 1]]);
            }
            Ok(())
        },
    )?;
    TriangleMesh::new(vertices, triangles)
        .map_err(|e| anyhow!("{}: invalid mesh: {e}", path.display()))
}

/// Optional per-point columns for `write_cloud_ply`.
#[derive(Default)]
pub struct CloudColumns<'a> {
    pub normals: Option<&'a [Point3]>,
    pub labels: Option<&'a [ClassId]>,
    pub scores: Option<&'a [f64]>,
}

/// Writes a binary little-endian cloud: double x/y/z, optional double
/// nx/ny/nz, optional ushort label, optional float score.
pub fn write_cloud_ply(path: &Path, points: &[Point3], columns: &CloudColumns<'_>) -> Result<()> {
    let mut header = String::from("ply\nformat binary_little_endian 1.0\n");
    header.push_str(&format!("element vertex {}\n", points.len()));
    header.push_str("property double x\nproperty double y\nproperty double z\n");
    if columns.normals.is_some() {
        header.push_str("property double nx\nproperty double ny\nproperty double nz\n");
    }
    if columns.labels.is_some() {
        header.push_str("property ushort label\n");
    }
    if columns.scores.is_some() {
        header.push_str("property float score\n");
    }
    header.push_str("end_header\n");

    let mut body: Vec<u8> = Vec::with_capacity(points.len() * 32);
    for (i, p) in points.iter().enumerate() {
        body.extend_from_slice(&p.x.to_le_bytes());
        body.extend_from_slice(&p.y.to_le_bytes());
        body.extend_from_slice(&p.z.to_le_bytes());
        if let Some(normals) = columns.normals {
            body.extend_from_slice(&normals[i].x.to_le_bytes());
            body.extend_from_slice(&normals[i].y.to_le_bytes());
            body.extend_from_slice(&normals[i].z.to_le_bytes());
        }
        if let Some(labels) = columns.labels {
            body.extend_from_slice(&labels[i].to_le_bytes());
        }
        if let Some(scores) = columns.scores {
            body.extend_from_slice(&(scores[i] as f32).to_le_bytes());
        }
    }

    let mut file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    file.write_all(header.as_bytes())?;
    file.write_all(&body)?;
    Ok(())
}

/// Per-point diagnostics for the debug export.
pub struct DebugColumns<'a> {
    pub section: &'a [u32],
    pub region: &'a [u32],
    pub rscore: &'a [Option<f64>],
    pub dscore: &'a [f64],
    pub svmscore: &'a [Option<f64>],
    pub score: &'a [f64],
    pub label: &'a [ClassId],
}

/// Debug cloud with all intermediate scores; undefined region/SVM scores are
/// written as NaN.
pub fn write_debug_ply(path: &Path, points: &[Point3], columns: &DebugColumns<'_>) -> Result<()> {
    let mut header = String::from("ply\nformat binary_little_endian 1.0\n");
    header.push_str(&format!("element vertex {}\n", points.len()));
    header.push_str("property double x\nproperty double y\nproperty double z\n");
    header.push_str("property ushort section\nproperty uint region\n");
    header.push_str("property float rscore\nproperty float dscore\nproperty float svmscore\n");
    header.push_str("property float score\nproperty ushort label\nend_header\n");

    let mut body: Vec<u8> = Vec::with_capacity(points.len() * 48);
    for (i, p) in points.iter().enumerate() {
        body.extend_from_slice(&p.x.to_le_bytes());
        body.extend_from_slice(&p.y.to_le_bytes());
        body.extend_from_slice(&p.z.to_le_bytes());
        body.extend_from_slice(&(columns.section[i] as u16).to_le_bytes());
        body.extend_from_slice(&columns.region[i].to_le_bytes());
        body.extend_from_slice(&(columns.rscore[i].map_or(f32::NAN, |v| v as f32)).to_le_bytes());
        body.extend_from_slice(&(columns.dscore[i] as f32).to_le_bytes());
        body.extend_from_slice(&(columns.svmscore[i].map_or(f32::NAN, |v| v as f32)).to_le_bytes());
        body.extend_from_slice(&(columns.score[i] as f32).to_le_bytes());
        body.extend_from_slice(&columns.label[i].to_le_bytes());
    }
    let mut file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    file.write_all(header.as_bytes())?;
    file.write_all(&body)?;
    Ok(())
}
