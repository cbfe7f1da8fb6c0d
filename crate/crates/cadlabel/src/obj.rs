//! Minimal OBJ mesh IO: `v` and `f` records, fan triangulation of polygons.
//! Vertex normals/texcoords and grouping directives are skipped.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use cadlabel_core::math::Point3;
use cadlabel_core::mesh::TriangleMesh;

pub fn read_mesh_obj(path: &Path) -> Result<TriangleMesh> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut vertices: Vec<Point3> = Vec::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();

    for (line_no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: &str| anyhow!("{}:{}: {msg}: {raw:?}", path.display(), line_no + 1);
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("v") => {
                let mut coord = |what| {
                    tok.next()
                        .ok_or_else(|| err(&format!("missing {what}")))?
                        .parse::<f64>()
                        .map_err(|_| err(&format!("bad {what}")))
                };
                let (x, y, z) = (coord("x")?, coord("y")?, coord("z")?);
                vertices.push(Point3::new(x, y, z));
            }
            Some("f") => {
                let mut indices = Vec::new();
                for part in tok {
                    let first = part.split('/').next().unwrap_or("");
                    let idx: i64 = first.parse().map_err(|_| err("bad face index"))?;
                    if idx <= 0 {
                        bail!(err("negative/zero face indices are not supported"));
                    }
                    if idx as usize > vertices.len() {
                        bail!(err("face index out of range"));
                    }
                    indices.push(idx as u32 - 1);
                }
                if indices.len() < 3 {
                    bail!(err("face needs at least 3 vertices"));
                }
                for k in 1..indices.len() - 1 {
                    triangles.push([indices[0], indices[k], indices[k + 1]]);
                }
            }
            // normals, texcoords, materials, groups, smoothing
            Some("vn") | Some("vt") | Some("vp") | Some("o") | Some("g") | Some("s")
            | Some("usemtl") | Some("mtllib") | Some("l") => {}
            Some(other) => bail!(err(&format!("unknown directive {other:?}"))),
            None => {}
        }
    }
    TriangleMesh::new(vertices, triangles)
        .map_err(|e| anyhow!("{}: invalid mesh: {e}", path.display()))
}

/// Writes vertices with shortest round-trip float formatting, so reloading
/// reproduces the exact f64 coordinates.
pub fn write_mesh_obj(path: &Path, mesh: &TriangleMesh) -> Result<()> {
    let mut out = String::new();
    for v in mesh.vertices() {
        out.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
    }
    for t in mesh.triangles() {
        out.push_str(&format!("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
    }
    let mut file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// Mesh loading dispatched on the file extension (.obj / .ply).
pub fn read_mesh(path: &Path) -> Result<TriangleMesh> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("obj") => read_mesh_obj(path),
        Some("ply") => crate::ply::read_mesh_ply(path),
        _ => bail!("{}: unsupported mesh format (use .obj or .ply)", path.display()),
    }
}
