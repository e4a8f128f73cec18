//! Taylor–Hood degree-of-freedom layout and constraint maps.
//!
//! Velocity nodes are the mesh vertices followed by the edge midpoints, so
//! `n_nodes = n_vertices + n_edges`. A velocity coefficient vector stores the
//! x-components of all nodes first and then the z-components:
//! index `c * n_nodes + node`. Pressure lives on the vertices.

use std::collections::HashMap;
use std::sync::Arc;

use super::quadrature::LOCAL_EDGES;
use super::sparse::CsrMatrix;
use crate::error::FemError;
use crate::mesh::{Marker, Mesh, MeshError, Point};

/// Role of a scalar node after constraints are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    /// Unknown with the given reduced index. Periodic slaves share the
    /// index of their master.
    Free(usize),
    /// Value prescribed by boundary data.
    Dirichlet,
}

#[derive(Debug, Clone)]
pub struct MixedSpace {
    mesh: Arc<Mesh>,
    edges: Vec<[usize; 2]>,
    tri_nodes: Vec<[usize; 6]>,
    node_coords: Vec<Point>,
    node_markers: Vec<Option<Marker>>,
    vel_kind: Vec<NodeKind>,
    n_vel_free_nodes: usize,
    periodic_map: Vec<(usize, usize)>,
    pres_index: Vec<usize>,
    n_pres_free: usize,
    pattern: CsrMatrix,
    elem_pos: Vec<[usize; 36]>,
    div_pattern: CsrMatrix,
    div_pos: Vec<[usize; 18]>,
    parallel: bool,
}

impl MixedSpace {
    pub fn new(mesh: impl Into<Arc<Mesh>>) -> Result<Self, FemError> {
        let mesh: Arc<Mesh> = mesh.into();
        let nv = mesh.n_vertices();
        let edges = mesh.edges();
        let edge_id: HashMap<[usize; 2], usize> = edges.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        let n_nodes = nv + edges.len();

        let tri_nodes: Vec<[usize; 6]> = mesh
            .triangles()
            .iter()
            .map(|t| {
                let mut n = [t[0], t[1], t[2], 0, 0, 0];
                for (k, [i, j]) in LOCAL_EDGES.iter().enumerate() {
                    let (a, b) = (t[*i], t[*j]);
                    n[3 + k] = nv + edge_id[&[a.min(b), a.max(b)]];
                }
                n
            })
            .collect();

        let mut node_coords: Vec<Point> = mesh.vertices().to_vec();
        for [a, b] in &edges {
            let (pa, pb) = (mesh.vertices()[*a], mesh.vertices()[*b]);
            node_coords.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
        }

        // Boundary markers per node; Dirichlet markers win over periodic ones.
        let mut node_markers: Vec<Option<Marker>> = vec![None; n_nodes];
        let mut on_side = [vec![false; n_nodes], vec![false; n_nodes]];
        for e in mesh.boundary_edges() {
            let [a, b] = e.vertices;
            for node in [a, b, nv + edge_id[&[a.min(b), a.max(b)]]] {
                let slot = &mut node_markers[node];
                match slot {
                    Some(old) if old.is_dirichlet() => {}
                    _ => *slot = Some(e.marker),
                }
                match e.marker {
                    Marker::PeriodicLeft => on_side[0][node] = true,
                    Marker::PeriodicRight => on_side[1][node] = true,
                    _ => {}
                }
            }
        }

        // Periodic pairing of right-side slaves with left-side masters.
        let has_periodic = on_side.iter().any(|s| s.iter().any(|&b| b));
        let mut master_of: HashMap<usize, usize> = HashMap::new();
        if has_periodic {
            let period = mesh.period().ok_or_else(|| {
                FemError::Mesh(MeshError::Periodic("periodic markers present but the mesh has no period".into()))
            })?;
            let (lo, hi) = mesh.bounding_box();
            let tol = 1e-10 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
            let mut left: Vec<(f64, usize)> = (0..n_nodes)
                .filter(|&i| on_side[0][i])
                .map(|i| (node_coords[i][1], i))
                .collect();
            left.sort_by(|a, b| a.0.total_cmp(&b.0));
            for i in 0..n_nodes {
                if !on_side[1][i] {
                    continue;
                }
                let p = node_coords[i];
                let k = left.partition_point(|(z, _)| *z < p[1] - tol);
                let hit = left[k..]
                    .iter()
                    .take_while(|(z, _)| *z <= p[1] + tol)
                    .find(|(_, j)| (node_coords[*j][0] - (p[0] - period)).abs() <= tol);
                match hit {
                    Some(&(_, j)) => {
                        master_of.insert(i, j);
                    }
                    None => {
                        return Err(FemError::Mesh(MeshError::Periodic(format!(
                            "no periodic partner for node at ({}, {})",
                            p[0], p[1]
                        ))))
                    }
                }
            }
        }

        let mut vel_kind = vec![NodeKind::Dirichlet; n_nodes];
        let mut n_free = 0;
        for i in 0..n_nodes {
            let dirichlet = node_markers[i].is_some_and(|m| m.is_dirichlet());
            if !dirichlet && !master_of.contains_key(&i) {
                vel_kind[i] = NodeKind::Free(n_free);
                n_free += 1;
            }
        }
        let mut periodic_map = Vec::new();
        for (&slave, &master) in &master_of {
            if let NodeKind::Free(k) = vel_kind[master] {
                vel_kind[slave] = NodeKind::Free(k);
                periodic_map.push((slave, master));
            }
        }
        periodic_map.sort_unstable();

        // Pressure: periodic identification only.
        let mut pres_index = vec![usize::MAX; nv];
        let mut n_pres_free = 0;
        for (i, slot) in pres_index.iter_mut().enumerate() {
            if !master_of.contains_key(&i) {
                *slot = n_pres_free;
                n_pres_free += 1;
            }
        }
        for (&slave, &master) in &master_of {
            if slave < nv {
                pres_index[slave] = pres_index[master];
            }
        }

        let mut rows = vec![Vec::new(); n_nodes];
        let mut div_rows = vec![Vec::new(); nv];
        for n in &tri_nodes {
            for &i in n {
                rows[i].extend_from_slice(n);
            }
            for &a in &n[..3] {
                div_rows[a].extend_from_slice(n);
            }
        }
        let pattern = CsrMatrix::from_pattern(n_nodes, n_nodes, rows);
        let div_pattern = CsrMatrix::from_pattern(nv, n_nodes, div_rows);
        let elem_pos = tri_nodes
            .iter()
            .map(|n| {
                let mut pos = [0; 36];
                for i in 0..6 {
                    for j in 0..6 {
                        pos[6 * i + j] = pattern.position(n[i], n[j]).expect("element pattern");
                    }
                }
                pos
            })
            .collect();
        let div_pos = tri_nodes
            .iter()
            .map(|n| {
                let mut pos = [0; 18];
                for a in 0..3 {
                    for j in 0..6 {
                        pos[6 * a + j] = div_pattern.position(n[a], n[j]).expect("divergence pattern");
                    }
                }
                pos
            })
            .collect();

        Ok(MixedSpace {
            mesh,
            edges,
            tri_nodes,
            node_coords,
            node_markers,
            vel_kind,
            n_vel_free_nodes: n_free,
            periodic_map,
            pres_index,
            n_pres_free,
            pattern,
            elem_pos,
            div_pattern,
            div_pos,
            parallel: true,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> Arc<Mesh> {
        Arc::clone(&self.mesh)
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Quadratic node indices of triangle `t` in local order.
    pub fn triangle_nodes(&self, t: usize) -> &[usize; 6] {
        &self.tri_nodes[t]
    }

    pub fn node_coords(&self) -> &[Point] {
        &self.node_coords
    }

    pub fn node_marker(&self, node: usize) -> Option<Marker> {
        self.node_markers[node]
    }

    pub fn node_kind(&self, node: usize) -> NodeKind {
        self.vel_kind[node]
    }

    /// Number of scalar quadratic nodes (vertices + edges).
    pub fn n_nodes(&self) -> usize {
        self.node_coords.len()
    }

    /// Velocity coefficient count before constraints: `2 * n_nodes`.
    pub fn n_vel(&self) -> usize {
        2 * self.n_nodes()
    }

    /// Pressure coefficient count before constraints: one per vertex.
    pub fn n_pres(&self) -> usize {
        self.mesh.n_vertices()
    }

    /// Unknown velocity coefficients after constraints.
    pub fn n_vel_free(&self) -> usize {
        2 * self.n_vel_free_nodes
    }

    pub fn n_vel_free_nodes(&self) -> usize {
        self.n_vel_free_nodes
    }

    /// Unknown pressure coefficients after periodic identification.
    pub fn n_pres_free(&self) -> usize {
        self.n_pres_free
    }

    /// Reduced pressure index of each vertex.
    pub fn pressure_index(&self) -> &[usize] {
        &self.pres_index
    }

    /// `(slave, master)` scalar node pairs.
    pub fn periodic_map(&self) -> &[(usize, usize)] {
        &self.periodic_map
    }

    /// Scalar nodes whose values are prescribed.
    pub fn dirichlet_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_nodes()).filter(|&i| self.vel_kind[i] == NodeKind::Dirichlet)
    }

    pub fn is_parallel(&self) -> bool {
        self.parallel
    }

    /// Selects parallel or strictly sequential element loops. Both produce
    /// bitwise identical results; local matrices are merged in element order.
    pub fn set_parallel(&mut self, parallel: bool) {
        self.parallel = parallel;
    }

    pub(crate) fn scalar_pattern(&self) -> &CsrMatrix {
        &self.pattern
    }

    pub(crate) fn element_positions(&self, t: usize) -> &[usize; 36] {
        &self.elem_pos[t]
    }

    pub(crate) fn div_pattern(&self) -> &CsrMatrix {
        &self.div_pattern
    }

    pub(crate) fn div_positions(&self, t: usize) -> &[usize; 18] {
        &self.div_pos[t]
    }

    pub fn check_velocity(&self, v: &[f64]) -> Result<(), FemError> {
        if v.len() != self.n_vel() {
            return Err(FemError::Dimension { expected: self.n_vel(), got: v.len() });
        }
        Ok(())
    }

    pub fn check_pressure(&self, p: &[f64]) -> Result<(), FemError> {
        if p.len() != self.n_pres() {
            return Err(FemError::Dimension { expected: self.n_pres(), got: p.len() });
        }
        Ok(())
    }

    /// Velocity vector with `v[node]` split into the two component blocks.
    pub fn velocity_at_node(&self, v: &[f64], node: usize) -> [f64; 2] {
        [v[node], v[self.n_nodes() + node]]
    }

    /// Vertex velocities as 2D vectors (for output).
    pub fn vertex_velocities(&self, v: &[f64]) -> Vec<[f64; 2]> {
        (0..self.mesh.n_vertices()).map(|i| self.velocity_at_node(v, i)).collect()
    }

    /// Reduced index of velocity coefficient `c * n_nodes + node`, if free.
    pub fn free_index(&self, comp: usize, node: usize) -> Option<usize> {
        match self.vel_kind[node] {
            NodeKind::Free(k) => Some(comp * self.n_vel_free_nodes + k),
            NodeKind::Dirichlet => None,
        }
    }

    /// Full velocity vector from reduced unknowns and prescribed values.
    /// Dirichlet coefficients are taken from `boundary`.
    pub fn expand_velocity(&self, free: &[f64], boundary: &[f64]) -> Vec<f64> {
        let n = self.n_nodes();
        let mut out = vec![0.0; 2 * n];
        for c in 0..2 {
            for i in 0..n {
                out[c * n + i] = match self.vel_kind[i] {
                    NodeKind::Free(k) => free[c * self.n_vel_free_nodes + k],
                    NodeKind::Dirichlet => boundary[c * n + i],
                };
            }
        }
        out
    }

    /// Reduced unknowns read from a full vector (masters only).
    pub fn restrict_velocity(&self, full: &[f64]) -> Vec<f64> {
        let n = self.n_nodes();
        let mut out = vec![0.0; self.n_vel_free()];
        for c in 0..2 {
            for i in (0..n).rev() {
                if let NodeKind::Free(k) = self.vel_kind[i] {
                    out[c * self.n_vel_free_nodes + k] = full[c * n + i];
                }
            }
        }
        out
    }

    /// Transpose of the expansion on free coefficients: sums slave
    /// contributions into their masters and drops Dirichlet rows.
    pub fn fold_velocity(&self, full: &[f64]) -> Vec<f64> {
        let n = self.n_nodes();
        let mut out = vec![0.0; self.n_vel_free()];
        for c in 0..2 {
            for i in 0..n {
                if let NodeKind::Free(k) = self.vel_kind[i] {
                    out[c * self.n_vel_free_nodes + k] += full[c * n + i];
                }
            }
        }
        out
    }

    pub fn expand_pressure(&self, free: &[f64]) -> Vec<f64> {
        self.pres_index.iter().map(|&k| free[k]).collect()
    }

    pub fn fold_pressure(&self, full: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_pres_free];
        for (i, &k) in self.pres_index.iter().enumerate() {
            out[k] += full[i];
        }
        out
    }

    /// Copies master values onto slave nodes so a full vector is consistent
    /// with the periodic identification.
    pub fn apply_periodic(&self, v: &mut [f64]) {
        let n = self.n_nodes();
        for &(s, m) in &self.periodic_map {
            v[s] = v[m];
            v[n + s] = v[n + m];
        }
    }
}
