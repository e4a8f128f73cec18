//! Reader for Gmsh MSH 2.2 ASCII files.
//!
//! Only the `$MeshFormat`, `$PhysicalNames`, `$Nodes` and `$Elements`
//! sections are interpreted. Triangles (type 2) form the mesh, lines (type 1)
//! carry boundary markers through their physical tag, points (type 15) are
//! ignored. Any other element type is rejected.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{signed_area, BoundaryEdge, Marker, Mesh, MeshError, Point};
use crate::error::io_err;

/// Maps physical groups (by numeric tag or by name) to boundary markers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MarkerTable {
    #[serde(default)]
    pub by_tag: BTreeMap<i64, Marker>,
    #[serde(default)]
    pub by_name: BTreeMap<String, Marker>,
}

impl MarkerTable {
    fn resolve(&self, tag: i64, names: &HashMap<i64, String>) -> Option<Marker> {
        self.by_tag
            .get(&tag)
            .copied()
            .or_else(|| names.get(&tag).and_then(|n| self.by_name.get(n).copied()))
    }
}

pub fn import_msh(path: impl AsRef<Path>, markers: &MarkerTable) -> Result<Mesh, MeshError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(io_err::<MeshError>(path))?;
    parse_msh(&text, markers)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str, MeshError> {
        for (i, l) in self.inner.by_ref() {
            self.line = i + 1;
            let l = l.trim();
            if !l.is_empty() {
                return Ok(l);
            }
        }
        Err(self.err("unexpected end of file"))
    }

    fn err(&self, msg: impl Into<String>) -> MeshError {
        MeshError::Msh { line: self.line, msg: msg.into() }
    }

    fn expect(&mut self, tag: &str) -> Result<(), MeshError> {
        let l = self.next()?;
        if l == tag {
            Ok(())
        } else {
            Err(self.err(format!("expected {tag}, found {l:?}")))
        }
    }

    fn count(&mut self) -> Result<usize, MeshError> {
        let l = self.next()?;
        l.parse().map_err(|_| self.err(format!("expected a count, found {l:?}")))
    }
}

fn parse_fields<T: std::str::FromStr>(l: &str, lines: &Lines) -> Result<Vec<T>, MeshError> {
    l.split_whitespace()
        .map(|f| f.parse().map_err(|_| lines.err(format!("malformed field {f:?}"))))
        .collect()
}

/// Parses MSH 2.2 ASCII text into a mesh.
pub fn parse_msh(text: &str, markers: &MarkerTable) -> Result<Mesh, MeshError> {
    let mut lines = Lines { inner: text.lines().enumerate(), line: 0 };
    let mut nodes: HashMap<i64, Point> = HashMap::new();
    let mut names: HashMap<i64, String> = HashMap::new();
    let mut tris: Vec<[i64; 3]> = Vec::new();
    let mut segs: Vec<([i64; 2], i64)> = Vec::new();
    let mut seen_format = false;

    while let Ok(section) = lines.next() {
        match section {
            "$MeshFormat" => {
                let l = lines.next()?;
                let mut f = l.split_whitespace();
                let version = f.next().unwrap_or("");
                let file_type = f.next().unwrap_or("");
                if !version.starts_with("2.") {
                    return Err(lines.err(format!("unsupported MSH version {version}")));
                }
                if file_type != "0" {
                    return Err(lines.err("binary MSH files are not supported"));
                }
                lines.expect("$EndMeshFormat")?;
                seen_format = true;
            }
            "$PhysicalNames" => {
                let count = lines.count()?;
                for _ in 0..count {
                    let l = lines.next()?;
                    let mut f = l.splitn(3, char::is_whitespace);
                    let _dim = f.next();
                    let tag: i64 = f
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| lines.err("malformed physical name"))?;
                    let name = f.next().unwrap_or("").trim().trim_matches('"').to_string();
                    names.insert(tag, name);
                }
                lines.expect("$EndPhysicalNames")?;
            }
            "$Nodes" => {
                let count = lines.count()?;
                for _ in 0..count {
                    let l = lines.next()?;
                    let f: Vec<f64> = parse_fields(l, &lines)?;
                    if f.len() < 3 {
                        return Err(lines.err("node line needs an id and coordinates"));
                    }
                    nodes.insert(f[0] as i64, [f[1], f[2]]);
                }
                lines.expect("$EndNodes")?;
            }
            "$Elements" => {
                let count = lines.count()?;
                for _ in 0..count {
                    let l = lines.next()?;
                    let f: Vec<i64> = parse_fields(l, &lines)?;
                    if f.len() < 3 {
                        return Err(lines.err("element line too short"));
                    }
                    let (etype, ntags) = (f[1], f[2] as usize);
                    let tags = &f[3..(3 + ntags).min(f.len())];
                    let conn = &f[(3 + ntags).min(f.len())..];
                    let physical = tags.first().copied();
                    match etype {
                        1 if conn.len() == 2 => {
                            let phys = physical.ok_or_else(|| lines.err("line element without physical tag"))?;
                            segs.push(([conn[0], conn[1]], phys));
                        }
                        2 if conn.len() == 3 => tris.push([conn[0], conn[1], conn[2]]),
                        15 => {}
                        1 | 2 => return Err(lines.err("wrong node count for element")),
                        other => {
                            return Err(lines.err(format!(
                                "unsupported element type {other} (only lines and 3-node triangles)"
                            )))
                        }
                    }
                }
                lines.expect("$EndElements")?;
            }
            other if other.starts_with('$') && !other.starts_with("$End") => {
                let end = format!("$End{}", &other[1..]);
                while lines.next()? != end {}
            }
            other => return Err(lines.err(format!("unexpected content {other:?}"))),
        }
    }
    if !seen_format {
        return Err(lines.err("missing $MeshFormat section"));
    }

    let mut index: HashMap<i64, usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut node = |id: i64, lines: &Lines| -> Result<usize, MeshError> {
        if let Some(&i) = index.get(&id) {
            return Ok(i);
        }
        let p = *nodes.get(&id).ok_or_else(|| lines.err(format!("unknown node {id}")))?;
        index.insert(id, vertices.len());
        vertices.push(p);
        Ok(vertices.len() - 1)
    };
    let mut triangles = Vec::with_capacity(tris.len());
    for t in &tris {
        triangles.push([node(t[0], &lines)?, node(t[1], &lines)?, node(t[2], &lines)?]);
    }
    for v in &mut triangles {
        if signed_area(vertices[v[0]], vertices[v[1]], vertices[v[2]]) < 0.0 {
            v.swap(1, 2);
        }
    }
    let mut boundary = Vec::with_capacity(segs.len());
    for (s, phys) in &segs {
        let marker = markers
            .resolve(*phys, &names)
            .ok_or_else(|| MeshError::Msh { line: 0, msg: format!("physical group {phys} has no marker mapping") })?;
        let a = *index.get(&s[0]).ok_or_else(|| lines.err(format!("line references node {} outside the triangulation", s[0])))?;
        let b = *index.get(&s[1]).ok_or_else(|| lines.err(format!("line references node {} outside the triangulation", s[1])))?;
        boundary.push(BoundaryEdge { vertices: [a, b], marker });
    }
    if boundary.is_empty() {
        return Err(MeshError::Msh { line: 0, msg: "no tagged boundary lines found".into() });
    }
    let periodic = boundary.iter().any(|e| e.marker == Marker::PeriodicLeft);
    let mesh = Mesh::new(vertices, triangles, boundary)?;
    if periodic {
        let (lo, hi) = mesh.bounding_box();
        Ok(mesh.with_period(hi[0] - lo[0]))
    } else {
        Ok(mesh)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &str = "$MeshFormat
2.2 0 8
$EndMeshFormat
$PhysicalNames
2
1 1 \"wall\"
1 2 \"lid\"
$EndPhysicalNames
$Nodes
4
1 0 0 0
2 1 0 0
3 1 1 0
4 0 1 0
$EndNodes
$Elements
6
1 1 2 1 1 1 2
2 1 2 1 1 2 3
3 1 2 2 2 3 4
4 1 2 1 1 4 1
5 2 2 3 3 1 2 3
6 2 2 3 3 1 4 3
$EndElements
";

    fn table() -> MarkerTable {
        let mut t = MarkerTable::default();
        t.by_name.insert("wall".into(), Marker::OuterCircle);
        t.by_tag.insert(2, Marker::TopWall);
        t
    }

    #[test]
    fn parses_square() {
        let mesh = parse_msh(SQUARE, &table()).unwrap();
        assert_eq!(mesh.n_vertices(), 4);
        assert_eq!(mesh.n_triangles(), 2);
        assert!((mesh.area() - 1.0).abs() < 1e-15);
        let top: Vec<_> = mesh.boundary_edges().iter().filter(|e| e.marker == Marker::TopWall).collect();
        assert_eq!(top.len(), 1);
    }

    #[test]
    fn rejects_unsupported_version() {
        let text = SQUARE.replace("2.2 0 8", "4.1 0 8");
        assert!(matches!(parse_msh(&text, &table()), Err(MeshError::Msh { .. })));
    }

    #[test]
    fn rejects_missing_physical_group() {
        let mut t = table();
        t.by_name.clear();
        assert!(parse_msh(SQUARE, &t).is_err());
    }

    #[test]
    fn rejects_quads() {
        let text = SQUARE.replace("6 2 2 3 3 1 4 3", "6 3 2 3 3 1 2 3 4");
        assert!(parse_msh(&text, &table()).is_err());
    }
}
