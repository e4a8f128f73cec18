use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::delaunay::triangulate;
use super::{signed_area, BoundaryEdge, Marker, Mesh, MeshError, Point};

/// A disk with a smaller off-centre circular obstacle removed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusSpec {
    pub outer_radius: f64,
    pub inner_radius: f64,
    pub inner_center: Point,
    /// Points on the outer circle.
    pub m: usize,
    /// Points on the inner circle.
    pub n: usize,
}

impl Default for AnnulusSpec {
    fn default() -> Self {
        AnnulusSpec { outer_radius: 1.0, inner_radius: 0.25, inner_center: [0.3, 0.0], m: 60, n: 30 }
    }
}

impl AnnulusSpec {
    pub fn new(m: usize, n: usize) -> Self {
        AnnulusSpec { m, n, ..Default::default() }
    }

    fn validate(&self) -> Result<(), MeshError> {
        let c = self.inner_center;
        let off = (c[0] * c[0] + c[1] * c[1]).sqrt();
        if !(self.outer_radius > 0.0 && self.inner_radius > 0.0) {
            return Err(MeshError::InvalidSpec("radii must be positive".into()));
        }
        if off + self.inner_radius >= self.outer_radius {
            return Err(MeshError::InvalidSpec(format!(
                "inner disk (centre offset {off}, radius {}) is not strictly inside the outer disk of radius {}",
                self.inner_radius, self.outer_radius
            )));
        }
        if self.m < 8 || self.n < 8 {
            return Err(MeshError::InvalidSpec(format!("need m >= 8 and n >= 8, got m = {}, n = {}", self.m, self.n)));
        }
        Ok(())
    }
}

/// Local target spacing: inner-circle spacing at the obstacle, growing
/// linearly with distance up to the outer-circle spacing.
struct Sizing {
    center: Point,
    radius: f64,
    h_in: f64,
    h_out: f64,
}

impl Sizing {
    const GRADE: f64 = 0.25;

    fn gap(&self, p: Point) -> f64 {
        let d = ((p[0] - self.center[0]).powi(2) + (p[1] - self.center[1]).powi(2)).sqrt();
        d - self.radius
    }

    fn at(&self, p: Point) -> f64 {
        let lo = self.h_in.min(self.h_out);
        (self.h_in + Self::GRADE * self.gap(p).max(0.0)).clamp(lo, self.h_out.max(self.h_in))
    }
}

/// Uniform grid for nearest-neighbour rejection.
struct PointGrid {
    cell: f64,
    origin: Point,
    cells: HashMap<(i64, i64), Vec<Point>>,
}

impl PointGrid {
    fn key(&self, p: Point) -> (i64, i64) {
        (((p[0] - self.origin[0]) / self.cell).floor() as i64, ((p[1] - self.origin[1]) / self.cell).floor() as i64)
    }

    fn insert(&mut self, p: Point) {
        let k = self.key(p);
        self.cells.entry(k).or_default().push(p);
    }

    fn has_within(&self, p: Point, r: f64) -> bool {
        let (kx, ky) = self.key(p);
        let reach = (r / self.cell).ceil() as i64;
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                if let Some(list) = self.cells.get(&(kx + dx, ky + dy)) {
                    if list.iter().any(|q| (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2) < r * r) {
                        return true;
                    }
                }
            }
        }
        false
    }
}

/// Delaunay triangulation of the annular region.
///
/// `refinement` multiplies both boundary point counts and divides the
/// interior target spacing, so refinement `r` roughly divides `h` by `r`.
pub fn build_annulus_mesh(spec: &AnnulusSpec, refinement: usize) -> Result<Mesh, MeshError> {
    spec.validate()?;
    if refinement == 0 {
        return Err(MeshError::InvalidSpec("refinement must be a positive integer".into()));
    }
    let m = spec.m * refinement;
    let n = spec.n * refinement;
    let (big_r, r, c) = (spec.outer_radius, spec.inner_radius, spec.inner_center);

    let mut points: Vec<Point> = Vec::new();
    for k in 0..m {
        let th = 2.0 * PI * k as f64 / m as f64;
        points.push([big_r * th.cos(), big_r * th.sin()]);
    }
    for k in 0..n {
        let th = 2.0 * PI * k as f64 / n as f64;
        points.push([c[0] + r * th.cos(), c[1] + r * th.sin()]);
    }

    let sizing = Sizing { center: c, radius: r, h_in: 2.0 * PI * r / n as f64, h_out: 2.0 * PI * big_r / m as f64 };
    let h_small = sizing.h_in.min(sizing.h_out);
    let mut grid = PointGrid { cell: h_small, origin: [-big_r, -big_r], cells: HashMap::new() };
    for &p in &points {
        grid.insert(p);
    }

    // Candidate seeds on rings concentric with the outer circle, accepted
    // when far enough from both circles and from every accepted point.
    let outer_apothem = big_r * (PI / m as f64).cos();
    let c_off = (c[0] * c[0] + c[1] * c[1]).sqrt();
    let mut rho = outer_apothem - 0.8 * sizing.h_out;
    let mut ring = 0usize;
    while rho > 0.0 {
        let nearest_gap = ((rho - c_off).abs() - r).max(0.0);
        let h_ring = sizing.at([c[0] + (r + nearest_gap), c[1]]);
        let mut th = 0.5 * (ring % 2) as f64 * h_ring / rho;
        while th < 2.0 * PI {
            let p = [rho * th.cos(), rho * th.sin()];
            let h = sizing.at(p);
            let to_outer = outer_apothem - rho;
            let to_inner = sizing.gap(p);
            if to_outer >= 0.6 * h && to_inner >= 0.6 * h && !grid.has_within(p, 0.75 * h) {
                grid.insert(p);
                points.push(p);
            }
            th += h / rho;
        }
        rho -= 0.866 * h_ring;
        ring += 1;
    }
    if !grid.has_within([0.0, 0.0], 0.75 * sizing.at([0.0, 0.0])) && sizing.gap([0.0, 0.0]) > sizing.at([0.0, 0.0]) {
        points.push([0.0, 0.0]);
    }

    let is_inner = |i: usize| (m..m + n).contains(&i);
    let triangles: Vec<[usize; 3]> = triangulate(&points)
        .into_iter()
        .filter(|t| !t.iter().all(|&i| is_inner(i)))
        .collect();

    for (index, t) in triangles.iter().enumerate() {
        let area = signed_area(points[t[0]], points[t[1]], points[t[2]]);
        if area < 1e-14 * big_r * big_r {
            return Err(MeshError::Degenerate { index, area });
        }
    }

    // Every remaining boundary edge must be a polygon edge of one of the circles.
    let mut count: HashMap<(usize, usize), u32> = HashMap::new();
    for t in &triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    let mut expected: HashSet<(usize, usize)> = HashSet::new();
    for k in 0..m {
        let (a, b) = (k, (k + 1) % m);
        expected.insert((a.min(b), a.max(b)));
    }
    for k in 0..n {
        let (a, b) = (m + k, m + (k + 1) % n);
        expected.insert((a.min(b), a.max(b)));
    }
    let mut boundary = Vec::with_capacity(m + n);
    for t in &triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            if count[&key] != 1 {
                continue;
            }
            if !expected.remove(&key) {
                return Err(MeshError::HoleCarving(format!("unexpected boundary edge ({a}, {b})")));
            }
            let marker = if is_inner(a) { Marker::InnerCircle } else { Marker::OuterCircle };
            boundary.push(BoundaryEdge { vertices: [a, b], marker });
        }
    }
    if let Some(&(a, b)) = expected.iter().next() {
        return Err(MeshError::HoleCarving(format!("missing boundary edge ({a}, {b})")));
    }
    Mesh::new(points, triangles, boundary)
}
