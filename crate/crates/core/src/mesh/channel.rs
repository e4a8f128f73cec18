use serde::{Deserialize, Serialize};

use super::{BoundaryEdge, Marker, Mesh, MeshError, Point};

/// Structured periodic channel `[0, L] x [0, L]`: periodic in x, walls at z = 0 and z = L.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    /// Channel height and horizontal period.
    pub length: f64,
    pub nx: usize,
    pub nz: usize,
    /// When set, a horizontal mesh line is placed exactly at `z = L - align_strip`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub align_strip: Option<f64>,
}

impl ChannelSpec {
    pub fn new(length: f64, nx: usize, nz: usize) -> Self {
        ChannelSpec { length, nx, nz, align_strip: None }
    }

    pub fn with_strip(mut self, h_strip: f64) -> Self {
        self.align_strip = Some(h_strip);
        self
    }

    fn validate(&self) -> Result<(), MeshError> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(MeshError::InvalidSpec(format!("channel length must be positive, got {}", self.length)));
        }
        if self.nx < 2 || self.nz < 2 {
            return Err(MeshError::InvalidSpec(format!(
                "channel needs nx >= 2 and nz >= 2, got nx = {}, nz = {}",
                self.nx, self.nz
            )));
        }
        if let Some(h) = self.align_strip {
            if !(h > 0.0 && h < self.length) {
                return Err(MeshError::InvalidSpec(format!(
                    "strip height must lie in (0, {}), got {h}",
                    self.length
                )));
            }
        }
        Ok(())
    }

    /// Row heights, bottom to top. The strip line is hit exactly when requested.
    fn z_levels(&self) -> Vec<f64> {
        let l = self.length;
        match self.align_strip {
            None => (0..=self.nz).map(|j| l * j as f64 / self.nz as f64).collect(),
            Some(h) => {
                let n_top = ((self.nz as f64 * h / l).round() as usize).clamp(1, self.nz - 1);
                let n_bot = self.nz - n_top;
                let z_line = l - h;
                let mut z: Vec<f64> = (0..n_bot).map(|j| z_line * j as f64 / n_bot as f64).collect();
                z.push(z_line);
                z.extend((1..n_top).map(|k| z_line + h * k as f64 / n_top as f64));
                z.push(l);
                z
            }
        }
    }
}

/// Builds the crossed-diagonal structured mesh of the periodic channel.
pub fn build_channel_mesh(spec: &ChannelSpec) -> Result<Mesh, MeshError> {
    spec.validate()?;
    let (nx, nz, l) = (spec.nx, spec.nz, spec.length);
    let zs = spec.z_levels();
    let row = nx + 1;
    let mut vertices: Vec<Point> = Vec::with_capacity(row * (nz + 1));
    for &z in &zs {
        for i in 0..=nx {
            let x = if i == nx { l } else { l * i as f64 / nx as f64 };
            vertices.push([x, z]);
        }
    }
    let id = |i: usize, j: usize| j * row + i;
    let mut triangles = Vec::with_capacity(2 * nx * nz);
    for j in 0..nz {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if (i + j) % 2 == 0 {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            } else {
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            }
        }
    }
    let mut boundary = Vec::with_capacity(2 * (nx + nz));
    for i in 0..nx {
        boundary.push(BoundaryEdge { vertices: [id(i, 0), id(i + 1, 0)], marker: Marker::BottomWall });
        boundary.push(BoundaryEdge { vertices: [id(i + 1, nz), id(i, nz)], marker: Marker::TopWall });
    }
    for j in 0..nz {
        boundary.push(BoundaryEdge { vertices: [id(0, j + 1), id(0, j)], marker: Marker::PeriodicLeft });
        boundary.push(BoundaryEdge { vertices: [id(nx, j), id(nx, j + 1)], marker: Marker::PeriodicRight });
    }
    Ok(Mesh::new(vertices, triangles, boundary)?.with_period(l))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_grid() {
        let m = build_channel_mesh(&ChannelSpec::new(1.0, 2, 2)).unwrap();
        assert_eq!(m.n_vertices(), 9);
        assert_eq!(m.n_triangles(), 8);
        assert_eq!(m.area(), 1.0);
        assert_eq!(m.period(), Some(1.0));
    }

    #[test]
    fn strip_line_is_exact() {
        let m = build_channel_mesh(&ChannelSpec::new(1.0, 10, 10).with_strip(0.1)).unwrap();
        assert!(m.vertices().iter().any(|v| v[1] == 0.9));
        let m = build_channel_mesh(&ChannelSpec::new(1.0, 7, 13).with_strip(0.25)).unwrap();
        assert!(m.vertices().iter().any(|v| v[1] == 0.75));
    }

    #[test]
    fn area_of_scaled_square() {
        let m = build_channel_mesh(&ChannelSpec::new(2.0, 4, 4)).unwrap();
        assert!((m.area() - 4.0).abs() <= 1e-12);
    }

    #[test]
    fn structured_diameter() {
        let m = build_channel_mesh(&ChannelSpec::new(1.0, 10, 10)).unwrap();
        assert!((m.h_max() - 2f64.sqrt() / 10.0).abs() <= 1e-12);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(build_channel_mesh(&ChannelSpec::new(1.0, 1, 4)).is_err());
        assert!(build_channel_mesh(&ChannelSpec::new(1.0, 4, 1)).is_err());
        assert!(build_channel_mesh(&ChannelSpec::new(1.0, 4, 4).with_strip(0.0)).is_err());
        assert!(build_channel_mesh(&ChannelSpec::new(1.0, 4, 4).with_strip(1.0)).is_err());
        assert!(build_channel_mesh(&ChannelSpec::new(-1.0, 4, 4)).is_err());
    }

    #[test]
    fn periodic_sides_match() {
        let m = build_channel_mesh(&ChannelSpec::new(1.0, 6, 9).with_strip(0.2)).unwrap();
        let side = |marker| {
            let mut z: Vec<f64> = m
                .boundary_edges()
                .iter()
                .filter(|e| e.marker == marker)
                .flat_map(|e| e.vertices)
                .map(|i| m.vertices()[i][1])
                .collect();
            z.sort_by(f64::total_cmp);
            z.dedup();
            z
        };
        let left = side(Marker::PeriodicLeft);
        let right = side(Marker::PeriodicRight);
        assert_eq!(left.len(), right.len());
        for (a, b) in left.iter().zip(&right) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn edge_manifoldness_count() {
        let m = build_channel_mesh(&ChannelSpec::new(1.0, 5, 3)).unwrap();
        let n_edges = m.edges().len();
        let n_boundary = m.boundary_edges().len();
        let n_interior = n_edges - n_boundary;
        assert_eq!(2 * n_interior + n_boundary, 3 * m.n_triangles());
    }
}
