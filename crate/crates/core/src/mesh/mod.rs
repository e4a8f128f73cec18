//! Two-dimensional conforming triangulations with boundary markers.
//!
//! Meshes come from three sources: a structured periodic channel
//! ([`build_channel_mesh`]), a Delaunay annulus with an off-centre obstacle
//! ([`build_annulus_mesh`]) and Gmsh MSH 2.2 files ([`import_msh`]). All of
//! them end up in [`Mesh::new`], which checks orientation and edge
//! manifoldness and computes the size metrics used by the dissipation bounds.

mod annulus;
mod channel;
pub mod delaunay;
mod gmsh;
pub mod vtk;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use crate::error::MeshError;
pub use annulus::{build_annulus_mesh, AnnulusSpec};
pub use channel::{build_channel_mesh, ChannelSpec};
pub use gmsh::{import_msh, parse_msh, MarkerTable};

/// A point in the (x, z) plane.
pub type Point = [f64; 2];

/// Boundary classification of an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Marker {
    OuterCircle,
    InnerCircle,
    BottomWall,
    TopWall,
    PeriodicLeft,
    PeriodicRight,
}

impl Marker {
    pub const ALL: [Marker; 6] = [
        Marker::OuterCircle,
        Marker::InnerCircle,
        Marker::BottomWall,
        Marker::TopWall,
        Marker::PeriodicLeft,
        Marker::PeriodicRight,
    ];

    /// Whether velocity is prescribed on edges carrying this marker.
    pub fn is_dirichlet(self) -> bool {
        !matches!(self, Marker::PeriodicLeft | Marker::PeriodicRight)
    }

    pub fn name(self) -> &'static str {
        match self {
            Marker::OuterCircle => "outer_circle",
            Marker::InnerCircle => "inner_circle",
            Marker::BottomWall => "bottom_wall",
            Marker::TopWall => "top_wall",
            Marker::PeriodicLeft => "periodic_left",
            Marker::PeriodicRight => "periodic_right",
        }
    }

    pub fn from_name(s: &str) -> Option<Marker> {
        Marker::ALL.into_iter().find(|m| m.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub marker: Marker,
}

/// Size metrics of a triangulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshSize {
    pub h_max: f64,
    pub h_min: f64,
    pub area: f64,
}

/// An immutable conforming triangulation.
#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    size: MeshSize,
    period: Option<f64>,
}

pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Exact maximum/minimum element diameter and total area.
pub fn mesh_size(vertices: &[Point], triangles: &[[usize; 3]]) -> Result<MeshSize, MeshError> {
    if triangles.is_empty() {
        return Err(MeshError::Empty);
    }
    let mut h_max = 0.0f64;
    let mut h_min = f64::INFINITY;
    let mut area = 0.0;
    for t in triangles {
        let [a, b, c] = t.map(|i| vertices[i]);
        let diam = dist(a, b).max(dist(b, c)).max(dist(c, a));
        h_max = h_max.max(diam);
        h_min = h_min.min(diam);
        area += signed_area(a, b, c);
    }
    Ok(MeshSize { h_max, h_min, area })
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh {
    /// Validates and builds a mesh. Triangles must be counter-clockwise.
    pub fn new(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
    ) -> Result<Self, MeshError> {
        if triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for v in &vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        let scale2 = (hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2);
        let mut counts: HashMap<(usize, usize), u32> = HashMap::with_capacity(triangles.len() * 2);
        for (index, t) in triangles.iter().enumerate() {
            if t.iter().any(|&i| i >= vertices.len()) {
                return Err(MeshError::InvalidSpec(format!("triangle {index} references a missing vertex")));
            }
            let area = signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
            if area <= 1e-14 * scale2 {
                return Err(MeshError::Degenerate { index, area });
            }
            for k in 0..3 {
                let c = counts.entry(edge_key(t[k], t[(k + 1) % 3])).or_insert(0);
                *c += 1;
                if *c > 2 {
                    return Err(MeshError::NonManifold(t[k], t[(k + 1) % 3]));
                }
            }
        }
        let mut listed = HashMap::with_capacity(boundary_edges.len());
        for e in &boundary_edges {
            let key = edge_key(e.vertices[0], e.vertices[1]);
            if counts.get(&key) != Some(&1) || listed.insert(key, e.marker).is_some() {
                return Err(MeshError::BadBoundaryEdge(e.vertices[0], e.vertices[1]));
            }
        }
        if let Some((&(a, b), _)) = counts.iter().find(|(k, &c)| c == 1 && !listed.contains_key(k)) {
            return Err(MeshError::BadBoundaryEdge(a, b));
        }
        let size = mesh_size(&vertices, &triangles)?;
        Ok(Mesh { vertices, triangles, boundary_edges, size, period: None })
    }

    pub(crate) fn with_period(mut self, period: f64) -> Self {
        self.period = Some(period);
        self
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn size(&self) -> MeshSize {
        self.size
    }

    pub fn h_max(&self) -> f64 {
        self.size.h_max
    }

    pub fn h_min(&self) -> f64 {
        self.size.h_min
    }

    pub fn area(&self) -> f64 {
        self.size.area
    }

    /// Horizontal period for meshes with periodic left/right sides.
    pub fn period(&self) -> Option<f64> {
        self.period
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        signed_area(a, b, c)
    }

    /// Unique undirected edges, sorted by vertex pair.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut edges: Vec<[usize; 2]> = self
            .triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| edge_key(t[k], t[(k + 1) % 3])))
            .map(|(a, b)| [a, b])
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// Bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }

    /// SHA-256 over vertex coordinates and connectivity, hex encoded.
    pub fn hash_hex(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.vertices.len() as u64).to_le_bytes());
        for v in &self.vertices {
            hasher.update(v[0].to_bits().to_le_bytes());
            hasher.update(v[1].to_bits().to_le_bytes());
        }
        hasher.update((self.triangles.len() as u64).to_le_bytes());
        for t in &self.triangles {
            for &i in t {
                hasher.update((i as u64).to_le_bytes());
            }
        }
        hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Mesh {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let t = vec![[0, 1, 2], [0, 2, 3]];
        let b = vec![
            BoundaryEdge { vertices: [0, 1], marker: Marker::BottomWall },
            BoundaryEdge { vertices: [1, 2], marker: Marker::PeriodicRight },
            BoundaryEdge { vertices: [2, 3], marker: Marker::TopWall },
            BoundaryEdge { vertices: [3, 0], marker: Marker::PeriodicLeft },
        ];
        Mesh::new(v, t, b).unwrap()
    }

    #[test]
    fn unit_square_diagonal() {
        let m = unit_square();
        assert_eq!(m.h_max(), 2f64.sqrt());
        assert_eq!(m.h_min(), 2f64.sqrt());
        assert_eq!(m.area(), 1.0);
        assert_eq!(m.edges().len(), 5);
    }

    #[test]
    fn empty_mesh_is_rejected() {
        assert!(matches!(mesh_size(&[], &[]), Err(MeshError::Empty)));
        assert!(matches!(Mesh::new(vec![], vec![], vec![]), Err(MeshError::Empty)));
    }

    #[test]
    fn clockwise_triangle_is_rejected() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let err = Mesh::new(v, vec![[0, 2, 1]], vec![]).unwrap_err();
        assert!(matches!(err, MeshError::Degenerate { .. }));
    }

    #[test]
    fn unmarked_boundary_is_rejected() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let b = vec![BoundaryEdge { vertices: [0, 1], marker: Marker::BottomWall }];
        assert!(matches!(Mesh::new(v, vec![[0, 1, 2]], b), Err(MeshError::BadBoundaryEdge(..))));
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = unit_square();
        let b = unit_square();
        assert_eq!(a.hash_hex(), b.hash_hex());
        assert_eq!(a.hash_hex().len(), 64);
        let c = build_channel_mesh(&ChannelSpec::new(1.0, 2, 2)).unwrap();
        assert_ne!(a.hash_hex(), c.hash_hex());
    }

    #[test]
    fn marker_names_round_trip() {
        for m in Marker::ALL {
            assert_eq!(Marker::from_name(m.name()), Some(m));
        }
    }
}
