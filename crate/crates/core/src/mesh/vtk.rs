//! Legacy VTK ASCII output (UNSTRUCTURED_GRID of linear triangles).

use std::fmt::Write as _;
use std::path::Path;

use super::{Mesh, MeshError};
use crate::error::io_err;

/// Data attached to a VTK dump.
#[derive(Default)]
pub struct VtkFields<'a> {
    pub point_vectors: Vec<(&'a str, &'a [[f64; 2]])>,
    pub point_scalars: Vec<(&'a str, &'a [f64])>,
    pub cell_scalars: Vec<(&'a str, &'a [f64])>,
}

pub fn render(mesh: &Mesh, title: &str, fields: &VtkFields) -> String {
    let mut s = String::new();
    let nv = mesh.n_vertices();
    let nt = mesh.n_triangles();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "{}", title.lines().next().unwrap_or("shearlab"));
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {nv} double");
    for v in mesh.vertices() {
        let _ = writeln!(s, "{} {} 0", v[0], v[1]);
    }
    let _ = writeln!(s, "CELLS {nt} {}", 4 * nt);
    for t in mesh.triangles() {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        let _ = writeln!(s, "5");
    }
    if !fields.point_vectors.is_empty() || !fields.point_scalars.is_empty() {
        let _ = writeln!(s, "POINT_DATA {nv}");
        for (name, data) in &fields.point_vectors {
            let _ = writeln!(s, "VECTORS {name} double");
            for v in data.iter() {
                let _ = writeln!(s, "{} {} 0", v[0], v[1]);
            }
        }
        for (name, data) in &fields.point_scalars {
            let _ = writeln!(s, "SCALARS {name} double 1");
            let _ = writeln!(s, "LOOKUP_TABLE default");
            for v in data.iter() {
                let _ = writeln!(s, "{v}");
            }
        }
    }
    if !fields.cell_scalars.is_empty() {
        let _ = writeln!(s, "CELL_DATA {nt}");
        for (name, data) in &fields.cell_scalars {
            let _ = writeln!(s, "SCALARS {name} double 1");
            let _ = writeln!(s, "LOOKUP_TABLE default");
            for v in data.iter() {
                let _ = writeln!(s, "{v}");
            }
        }
    }
    s
}

pub fn write(path: impl AsRef<Path>, mesh: &Mesh, title: &str, fields: &VtkFields) -> Result<(), MeshError> {
    let path = path.as_ref();
    std::fs::write(path, render(mesh, title, fields)).map_err(io_err::<MeshError>(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_channel_mesh, ChannelSpec};

    #[test]
    fn header_and_counts() {
        let mesh = build_channel_mesh(&ChannelSpec::new(1.0, 2, 2)).unwrap();
        let areas: Vec<f64> = (0..mesh.n_triangles()).map(|t| mesh.triangle_area(t)).collect();
        let fields = VtkFields { cell_scalars: vec![("area", &areas)], ..Default::default() };
        let text = render(&mesh, "test", &fields);
        assert!(text.starts_with("# vtk DataFile Version 3.0\ntest\nASCII\nDATASET UNSTRUCTURED_GRID\nPOINTS 9 double"));
        assert!(text.contains("CELLS 8 32"));
        assert!(text.contains("CELL_DATA 8"));
    }
}
