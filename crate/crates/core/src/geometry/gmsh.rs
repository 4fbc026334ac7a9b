//! Gmsh ASCII v2.2 input/output and a plain-text native mesh format.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::vec3::Vec3;

use super::TriangleMesh;

const GMSH_LINE: u32 = 1;
const GMSH_TRIANGLE: u32 = 2;
const GMSH_POINT: u32 = 15;

/// Reads a Gmsh ASCII v2.2 mesh file.
pub fn import_gmsh<T: Real>(path: impl AsRef<Path>) -> Result<TriangleMesh<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_gmsh(&text, &path.display().to_string())
}

/// Parses Gmsh ASCII v2.2 text. Line and point elements are skipped; any
/// other element type is rejected.
pub fn read_gmsh<T: Real>(text: &str, label: &str) -> Result<TriangleMesh<T>> {
    let fail = |line: usize, msg: String| Error::Format {
        path: label.to_string(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut next = |what: &str| -> Result<(usize, &str)> {
        lines
            .next()
            .ok_or_else(|| fail(0, format!("unexpected end of file while reading {what}")))
    };

    let mut ids: std::collections::HashMap<u64, usize> = Default::default();
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut saw_format = false;
    let mut saw_nodes = false;
    let mut saw_elements = false;

    loop {
        let (ln, line) = match next("section header") {
            Ok(x) => x,
            Err(_) => break,
        };
        match line {
            "" => continue,
            "$MeshFormat" => {
                let (ln, body) = next("mesh format")?;
                let mut parts = body.split_whitespace();
                let version = parts.next().unwrap_or("");
                let file_type = parts.next().unwrap_or("");
                if !version.starts_with("2.") {
                    return Err(fail(ln, format!("unsupported Gmsh version {version}")));
                }
                if file_type != "0" {
                    return Err(fail(ln, "binary Gmsh files are not supported".into()));
                }
                let (ln, end) = next("$EndMeshFormat")?;
                if end != "$EndMeshFormat" {
                    return Err(fail(ln, format!("expected $EndMeshFormat, found `{end}`")));
                }
                saw_format = true;
            }
            "$Nodes" => {
                let (ln, count) = next("node count")?;
                let n: usize = count
                    .parse()
                    .map_err(|_| fail(ln, format!("bad node count `{count}`")))?;
                for _ in 0..n {
                    let (ln, body) = next("node")?;
                    let f: Vec<&str> = body.split_whitespace().collect();
                    if f.len() != 4 {
                        return Err(fail(ln, format!("node line needs 4 fields, found {}", f.len())));
                    }
                    let id: u64 = f[0]
                        .parse()
                        .map_err(|_| fail(ln, format!("bad node id `{}`", f[0])))?;
                    let mut c = [0.0f64; 3];
                    for k in 0..3 {
                        c[k] = f[k + 1]
                            .parse()
                            .map_err(|_| fail(ln, format!("bad coordinate `{}`", f[k + 1])))?;
                    }
                    if ids.insert(id, vertices.len()).is_some() {
                        return Err(fail(ln, format!("duplicate node id {id}")));
                    }
                    vertices.push(Vec3::from_f64(c));
                }
                let (ln, end) = next("$EndNodes")?;
                if end != "$EndNodes" {
                    return Err(fail(ln, format!("expected $EndNodes, found `{end}`")));
                }
                saw_nodes = true;
            }
            "$Elements" => {
                let (ln, count) = next("element count")?;
                let n: usize = count
                    .parse()
                    .map_err(|_| fail(ln, format!("bad element count `{count}`")))?;
                for _ in 0..n {
                    let (ln, body) = next("element")?;
                    let f: Vec<u64> = body
                        .split_whitespace()
                        .map(|s| s.parse::<u64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| fail(ln, format!("malformed element line `{body}`")))?;
                    if f.len() < 3 {
                        return Err(fail(ln, "element line too short".into()));
                    }
                    let kind = f[1] as u32;
                    let ntags = f[2] as usize;
                    let nodes = &f[(3 + ntags).min(f.len())..];
                    match kind {
                        GMSH_LINE | GMSH_POINT => continue,
                        GMSH_TRIANGLE => {
                            if nodes.len() != 3 {
                                return Err(fail(ln, "triangle needs 3 nodes".into()));
                            }
                            let mut tri = [0usize; 3];
                            for k in 0..3 {
                                tri[k] = *ids.get(&nodes[k]).ok_or_else(|| {
                                    fail(ln, format!("unknown node {}", nodes[k]))
                                })?;
                            }
                            triangles.push(tri);
                        }
                        other => {
                            return Err(fail(ln, format!("unsupported element type {other}")));
                        }
                    }
                }
                let (ln, end) = next("$EndElements")?;
                if end != "$EndElements" {
                    return Err(fail(ln, format!("expected $EndElements, found `{end}`")));
                }
                saw_elements = true;
            }
            other if other.starts_with('$') => {
                // skip unknown sections
                let end = format!("$End{}", &other[1..]);
                loop {
                    let (_, l) = next(&end)?;
                    if l == end {
                        break;
                    }
                }
            }
            other => return Err(fail(ln, format!("unexpected line `{other}`"))),
        }
    }
    if !saw_format || !saw_nodes || !saw_elements {
        return Err(fail(
            0,
            "missing $MeshFormat, $Nodes or $Elements section".into(),
        ));
    }
    TriangleMesh::new(vertices, triangles)
}

/// Serialises a mesh as Gmsh ASCII v2.2.
pub fn write_gmsh<T: Real>(mesh: &TriangleMesh<T>) -> String {
    let mut s = String::new();
    s.push_str("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n");
    let _ = writeln!(s, "{}", mesh.num_vertices());
    for (i, v) in mesh.vertices().iter().enumerate() {
        let [x, y, z] = v.to_f64();
        let _ = writeln!(s, "{} {x:.17e} {y:.17e} {z:.17e}", i + 1);
    }
    s.push_str("$EndNodes\n$Elements\n");
    let _ = writeln!(s, "{}", mesh.num_triangles());
    for (i, t) in mesh.triangles().iter().enumerate() {
        let _ = writeln!(s, "{} 2 2 0 1 {} {} {}", i + 1, t[0] + 1, t[1] + 1, t[2] + 1);
    }
    s.push_str("$EndElements\n");
    s
}

pub fn export_gmsh<T: Real>(mesh: &TriangleMesh<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_gmsh(mesh)).map_err(|e| Error::io(path, e))
}

/// Plain-text dump: vertex table followed by the triangle table.
pub fn write_native<T: Real>(mesh: &TriangleMesh<T>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "vertices {}", mesh.num_vertices());
    for v in mesh.vertices() {
        let [x, y, z] = v.to_f64();
        let _ = writeln!(s, "{x:.17e} {y:.17e} {z:.17e}");
    }
    let _ = writeln!(s, "triangles {}", mesh.num_triangles());
    for t in mesh.triangles() {
        let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
    }
    s
}

pub fn read_native<T: Real>(text: &str, label: &str) -> Result<TriangleMesh<T>> {
    let fail = |line: usize, msg: String| Error::Format {
        path: label.to_string(),
        line,
        msg,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut header = |name: &str| -> Result<usize> {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| fail(0, format!("missing `{name}` header")))?;
        l.strip_prefix(name)
            .and_then(|r| r.trim().parse().ok())
            .ok_or_else(|| fail(ln, format!("expected `{name} <count>`")))
    };
    let nv = header("vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| fail(0, "truncated vertex table".into()))?;
        let c: Vec<f64> = l
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| fail(ln, "bad vertex".into()))?;
        if c.len() != 3 {
            return Err(fail(ln, "vertex needs 3 coordinates".into()));
        }
        vertices.push(Vec3::from_f64([c[0], c[1], c[2]]));
    }
    let mut lines = lines;
    let (ln, l) = lines
        .next()
        .ok_or_else(|| fail(0, "missing `triangles` header".into()))?;
    let nt: usize = l
        .strip_prefix("triangles")
        .and_then(|r| r.trim().parse().ok())
        .ok_or_else(|| fail(ln, "expected `triangles <count>`".into()))?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, l) = lines.next().ok_or_else(|| fail(0, "truncated triangle table".into()))?;
        let c: Vec<usize> = l
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| fail(ln, "bad triangle".into()))?;
        if c.len() != 3 {
            return Err(fail(ln, "triangle needs 3 indices".into()));
        }
        triangles.push([c[0], c[1], c[2]]);
    }
    TriangleMesh::new(vertices, triangles)
}
