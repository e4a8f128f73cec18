//! Incremental Bowyer–Watson Delaunay triangulation.
//!
//! Point location walks the adjacency graph from the most recently created
//! triangle; the cavity is grown breadth-first through neighbours. Orientation
//! and in-circle decisions use exact adaptive predicates, so cocircular input
//! (points sampled on a circle) is handled consistently.

use robust::{incircle, orient2d, Coord};

use super::Point;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy)]
struct Tri {
    v: [usize; 3],
    /// `nb[k]` is the neighbour across the edge opposite `v[k]`.
    nb: [usize; 3],
    alive: bool,
}

fn coord(p: Point) -> Coord<f64> {
    Coord { x: p[0], y: p[1] }
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    orient2d(coord(a), coord(b), coord(c))
}

/// Positive when `d` lies strictly inside the circumcircle of the CCW triangle `abc`.
pub fn in_circumcircle(a: Point, b: Point, c: Point, d: Point) -> f64 {
    incircle(coord(a), coord(b), coord(c), coord(d))
}

struct Triangulator {
    pts: Vec<Point>,
    tris: Vec<Tri>,
    last: usize,
}

impl Triangulator {
    fn locate(&self, p: Point) -> usize {
        let mut t = self.last;
        let mut steps = 0usize;
        'walk: loop {
            steps += 1;
            if steps > 4 * self.tris.len() + 16 {
                break;
            }
            let tri = &self.tris[t];
            for k in 0..3 {
                let a = self.pts[tri.v[(k + 1) % 3]];
                let b = self.pts[tri.v[(k + 2) % 3]];
                if orient(a, b, p) < 0.0 && tri.nb[k] != NONE {
                    t = tri.nb[k];
                    continue 'walk;
                }
            }
            return t;
        }
        // The visibility walk can cycle on non-Delaunay intermediate states;
        // fall back to a scan.
        self.tris
            .iter()
            .position(|tri| {
                tri.alive
                    && (0..3).all(|k| {
                        orient(self.pts[tri.v[(k + 1) % 3]], self.pts[tri.v[(k + 2) % 3]], p) >= 0.0
                    })
            })
            .expect("point outside the super triangle")
    }

    fn insert(&mut self, pi: usize) {
        let p = self.pts[pi];
        let start = self.locate(p);

        let mut bad = vec![start];
        let mut is_bad = std::collections::HashSet::from([start]);
        let mut head = 0;
        while head < bad.len() {
            let t = bad[head];
            head += 1;
            for &n in &self.tris[t].nb {
                if n == NONE || is_bad.contains(&n) {
                    continue;
                }
                let [a, b, c] = self.tris[n].v.map(|i| self.pts[i]);
                if in_circumcircle(a, b, c, p) > 0.0 {
                    is_bad.insert(n);
                    bad.push(n);
                }
            }
        }

        // Cavity boundary edges (a, b) with the outer neighbour across them.
        let mut rim: Vec<(usize, usize, usize)> = Vec::with_capacity(bad.len() + 2);
        for &t in &bad {
            let tri = self.tris[t];
            for k in 0..3 {
                let n = tri.nb[k];
                if n == NONE || !is_bad.contains(&n) {
                    rim.push((tri.v[(k + 1) % 3], tri.v[(k + 2) % 3], n));
                }
            }
        }
        for &t in &bad {
            self.tris[t].alive = false;
        }

        let first = self.tris.len();
        for (j, &(a, b, outer)) in rim.iter().enumerate() {
            let id = first + j;
            self.tris.push(Tri { v: [a, b, pi], nb: [NONE, NONE, outer], alive: true });
            if outer != NONE {
                let o = &mut self.tris[outer];
                for k in 0..3 {
                    let (oa, ob) = (o.v[(k + 1) % 3], o.v[(k + 2) % 3]);
                    if oa == b && ob == a {
                        o.nb[k] = id;
                    }
                }
            }
        }
        // New triangle (a, b, p): across (b, p) is the one starting at b,
        // across (p, a) is the one ending at a.
        for j in 0..rim.len() {
            let (a, b, _) = rim[j];
            let next = rim.iter().position(|r| r.0 == b).expect("open cavity rim");
            let prev = rim.iter().position(|r| r.1 == a).expect("open cavity rim");
            self.tris[first + j].nb[0] = first + next;
            self.tris[first + j].nb[1] = first + prev;
        }
        self.last = first;
    }
}

/// Delaunay triangulation of `points`; returns CCW triangles over input indices.
///
/// Duplicate points are skipped. Fewer than three non-collinear points
/// produce an empty result.
pub fn triangulate(points: &[Point]) -> Vec<[usize; 3]> {
    let n = points.len();
    if n < 3 {
        return Vec::new();
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(f64::MIN_POSITIVE);
    let c = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    let big = 1.0e3 * span;
    let mut pts = points.to_vec();
    pts.push([c[0] - 2.0 * big, c[1] - big]);
    pts.push([c[0] + 2.0 * big, c[1] - big]);
    pts.push([c[0], c[1] + 2.0 * big]);
    let mut tr = Triangulator {
        pts,
        tris: vec![Tri { v: [n, n + 1, n + 2], nb: [NONE; 3], alive: true }],
        last: 0,
    };

    // Insert in a serpentine grid order so successive points are close.
    let cells = ((n as f64).sqrt() / 2.0).ceil().max(1.0) as usize;
    let cell_of = |p: Point| {
        let cx = (((p[0] - lo[0]) / span * cells as f64) as usize).min(cells - 1);
        let cy = (((p[1] - lo[1]) / span * cells as f64) as usize).min(cells - 1);
        let cx = if cy % 2 == 0 { cx } else { cells - 1 - cx };
        (cy, cx)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| cell_of(points[i]));

    let mut seen = std::collections::HashSet::with_capacity(n);
    for &i in &order {
        if !seen.insert((points[i][0].to_bits(), points[i][1].to_bits())) {
            continue;
        }
        tr.insert(i);
        if tr.tris.len() > 8 * n + 64 && tr.tris.iter().filter(|t| !t.alive).count() > tr.tris.len() / 2 {
            compact(&mut tr);
        }
    }
    tr.tris
        .iter()
        .filter(|t| t.alive && t.v.iter().all(|&v| v < n))
        .map(|t| t.v)
        .collect()
}

fn compact(tr: &mut Triangulator) {
    let mut remap = vec![NONE; tr.tris.len()];
    let mut next = 0;
    for (i, t) in tr.tris.iter().enumerate() {
        if t.alive {
            remap[i] = next;
            next += 1;
        }
    }
    let mut kept: Vec<Tri> = tr.tris.iter().filter(|t| t.alive).copied().collect();
    for t in &mut kept {
        for n in &mut t.nb {
            if *n != NONE {
                *n = remap[*n];
            }
        }
    }
    tr.last = if remap[tr.last] == NONE { 0 } else { remap[tr.last] };
    tr.tris = kept;
}

/// Checks the empty-circumcircle property of every triangle against every point.
///
/// Returns the number of (triangle, point) violations.
pub fn count_delaunay_violations(points: &[Point], triangles: &[[usize; 3]]) -> usize {
    triangles
        .iter()
        .map(|t| {
            let [a, b, c] = t.map(|i| points[i]);
            points
                .iter()
                .enumerate()
                .filter(|(i, &p)| !t.contains(i) && in_circumcircle(a, b, c, p) > 0.0)
                .count()
        })
        .sum()
}
