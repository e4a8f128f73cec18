//! Triangle quadrature and the quadratic Lagrange basis.

use crate::mesh::Point;

/// Quadrature point in barycentric coordinates with a weight normalised to sum to one.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    pub bary: [f64; 3],
    pub weight: f64,
}

/// Seven-point rule, exact for polynomials of total degree 5.
pub fn seven_point_rule() -> [QuadPoint; 7] {
    let s15 = 15f64.sqrt();
    let a1 = (6.0 - s15) / 21.0;
    let b1 = (9.0 + 2.0 * s15) / 21.0;
    let a2 = (6.0 + s15) / 21.0;
    let b2 = (9.0 - 2.0 * s15) / 21.0;
    let w1 = (155.0 - s15) / 1200.0;
    let w2 = (155.0 + s15) / 1200.0;
    let third = 1.0 / 3.0;
    [
        QuadPoint { bary: [third, third, third], weight: 9.0 / 40.0 },
        QuadPoint { bary: [a1, a1, b1], weight: w1 },
        QuadPoint { bary: [a1, b1, a1], weight: w1 },
        QuadPoint { bary: [b1, a1, a1], weight: w1 },
        QuadPoint { bary: [a2, a2, b2], weight: w2 },
        QuadPoint { bary: [a2, b2, a2], weight: w2 },
        QuadPoint { bary: [b2, a2, a2], weight: w2 },
    ]
}

/// Local node order of the quadratic element: three vertices, then the
/// midpoints of edges (0,1), (1,2), (2,0).
pub const LOCAL_EDGES: [[usize; 2]; 3] = [[0, 1], [1, 2], [2, 0]];

/// Quadratic basis values at barycentric coordinates `l`.
pub fn p2_values(l: [f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

/// Quadratic basis gradients given barycentrics and their (constant) gradients.
pub fn p2_gradients(l: [f64; 3], gl: &[[f64; 2]; 3]) -> [[f64; 2]; 6] {
    let mut g = [[0.0; 2]; 6];
    for i in 0..3 {
        let f = 4.0 * l[i] - 1.0;
        g[i] = [f * gl[i][0], f * gl[i][1]];
    }
    for (k, [i, j]) in LOCAL_EDGES.iter().enumerate() {
        g[3 + k] = [
            4.0 * (l[*i] * gl[*j][0] + l[*j] * gl[*i][0]),
            4.0 * (l[*i] * gl[*j][1] + l[*j] * gl[*i][1]),
        ];
    }
    g
}

/// Affine geometry of one triangle.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub vertices: [Point; 3],
    pub area: f64,
    /// Gradients of the barycentric coordinates.
    pub grad_bary: [[f64; 2]; 3],
}

impl ElementGeometry {
    pub fn new(vertices: [Point; 3]) -> Self {
        let [a, b, c] = vertices;
        let area = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
        let inv = 1.0 / (2.0 * area);
        let mut grad_bary = [[0.0; 2]; 3];
        for i in 0..3 {
            let pj = vertices[(i + 1) % 3];
            let pk = vertices[(i + 2) % 3];
            grad_bary[i] = [(pj[1] - pk[1]) * inv, (pk[0] - pj[0]) * inv];
        }
        ElementGeometry { vertices, area, grad_bary }
    }

    pub fn map(&self, l: [f64; 3]) -> Point {
        let v = &self.vertices;
        [
            l[0] * v[0][0] + l[1] * v[1][0] + l[2] * v[2][0],
            l[0] * v[0][1] + l[1] * v[1][1] + l[2] * v[2][1],
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// Exact integral of l0^a l1^b l2^c over a triangle of unit area.
    fn exact_monomial(a: u32, b: u32, c: u32) -> f64 {
        2.0 * factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 2)
    }

    #[test]
    fn rule_integrates_degree_five() {
        let rule = seven_point_rule();
        for a in 0..=5u32 {
            for b in 0..=(5 - a) {
                for c in 0..=(5 - a - b) {
                    let q: f64 = rule
                        .iter()
                        .map(|p| p.weight * p.bary[0].powi(a as i32) * p.bary[1].powi(b as i32) * p.bary[2].powi(c as i32))
                        .sum();
                    assert!((q - exact_monomial(a, b, c)).abs() < 1e-15, "({a},{b},{c})");
                }
            }
        }
    }

    #[test]
    fn basis_is_nodal_and_partition_of_unity() {
        let nodes = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];
        for (i, l) in nodes.iter().enumerate() {
            let v = p2_values(*l);
            for (j, vj) in v.iter().enumerate() {
                assert_eq!(*vj, if i == j { 1.0 } else { 0.0 });
            }
        }
        let v = p2_values([0.2, 0.3, 0.5]);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let geo = ElementGeometry::new([[0.1, 0.2], [1.3, 0.4], [0.5, 1.1]]);
        let x = geo.map([0.2, 0.3, 0.5]);
        let to_bary = |p: Point| {
            let l1 = (p[0] - geo.vertices[0][0]) * geo.grad_bary[1][0] + (p[1] - geo.vertices[0][1]) * geo.grad_bary[1][1];
            let l2 = (p[0] - geo.vertices[0][0]) * geo.grad_bary[2][0] + (p[1] - geo.vertices[0][1]) * geo.grad_bary[2][1];
            [1.0 - l1 - l2, l1, l2]
        };
        let g = p2_gradients(to_bary(x), &geo.grad_bary);
        let h = 1e-6;
        for i in 0..6 {
            for d in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[d] += h;
                xm[d] -= h;
                let fd = (p2_values(to_bary(xp))[i] - p2_values(to_bary(xm))[i]) / (2.0 * h);
                assert!((fd - g[i][d]).abs() < 1e-8);
            }
        }
    }
}
