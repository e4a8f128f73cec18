//! Element loops for the bilinear, trilinear and eddy-viscosity forms.
//!
//! All velocity operators here act componentwise, so they are stored as a
//! scalar matrix `K` on the quadratic nodes; the vector operator is
//! `diag(K, K)` in the component-major layout of [`MixedSpace`].

use rayon::prelude::*;

use super::quadrature::{p2_gradients, p2_values, seven_point_rule, ElementGeometry, QuadPoint};
use super::space::MixedSpace;
use super::sparse::CsrMatrix;
use crate::error::FemError;
use crate::mesh::Point;

/// Name of the quadrature rule used by every element loop.
pub const QUADRATURE: &str = "7-point, degree 5";

/// Constant-in-time matrices of the scheme.
#[derive(Debug, Clone)]
pub struct AssembledForms {
    /// Scalar quadratic mass matrix `∫ φ_i φ_j`.
    pub mass: CsrMatrix,
    /// Scalar quadratic stiffness matrix `∫ ∇φ_i · ∇φ_j`.
    pub stiffness: CsrMatrix,
    /// `div[c][a][j] = ∫ ψ_a ∂φ_j/∂x_c` with ψ the linear pressure basis.
    pub div: [CsrMatrix; 2],
    /// `∫ ψ_a` per vertex.
    pub pressure_mass: Vec<f64>,
    pub quadrature: &'static str,
}

impl AssembledForms {
    /// `B u`, one entry per vertex: `∫ ψ_a ∇·u`.
    pub fn divergence(&self, u: &[f64]) -> Vec<f64> {
        let n = self.mass.nrows();
        let mut out = self.div[0].mul_vec(&u[..n]);
        self.div[1].mul_vec_add(&u[n..], 1.0, &mut out);
        out
    }

    /// `Bᵀ p` as a full velocity vector.
    pub fn divergence_transpose(&self, p: &[f64]) -> Vec<f64> {
        let mut out = self.div[0].mul_vec_transpose(p);
        out.extend(self.div[1].mul_vec_transpose(p));
        out
    }

    /// `∫ p`.
    pub fn pressure_integral(&self, p: &[f64]) -> f64 {
        p.iter().zip(&self.pressure_mass).map(|(a, b)| a * b).sum()
    }
}

/// Applies `diag(K, K)` to a component-major velocity vector.
pub fn block_apply(k: &CsrMatrix, u: &[f64]) -> Vec<f64> {
    let n = k.nrows();
    let mut out = k.mul_vec(&u[..n]);
    out.extend(k.mul_vec(&u[n..]));
    out
}

/// `wᵀ diag(K, K) v`.
pub fn block_bilinear(k: &CsrMatrix, w: &[f64], v: &[f64]) -> f64 {
    let n = k.nrows();
    k.bilinear(&w[..n], &v[..n]) + k.bilinear(&w[n..], &v[n..])
}

/// `uᵀ diag(K, K) u`.
pub fn block_quad(k: &CsrMatrix, u: &[f64]) -> f64 {
    block_bilinear(k, u, u)
}

struct RefTables {
    rule: [QuadPoint; 7],
    values: [[f64; 6]; 7],
}

fn ref_tables() -> &'static RefTables {
    static TABLES: std::sync::OnceLock<RefTables> = std::sync::OnceLock::new();
    TABLES.get_or_init(|| {
        let rule = seven_point_rule();
        let values = std::array::from_fn(|q| p2_values(rule[q].bary));
        RefTables { rule, values }
    })
}

impl MixedSpace {
    pub fn element_geometry(&self, t: usize) -> ElementGeometry {
        let v = self.mesh().vertices();
        let tri = self.mesh().triangles()[t];
        ElementGeometry::new([v[tri[0]], v[tri[1]], v[tri[2]]])
    }

    fn gather(&self, u: &[f64], t: usize) -> [[f64; 6]; 2] {
        let n = self.n_nodes();
        let nodes = self.triangle_nodes(t);
        [std::array::from_fn(|k| u[nodes[k]]), std::array::from_fn(|k| u[n + nodes[k]])]
    }

    fn element_map<L: Send, F: Fn(usize) -> L + Sync + Send>(&self, f: F) -> Vec<L> {
        let nt = self.mesh().n_triangles();
        if self.is_parallel() {
            (0..nt).into_par_iter().map(f).collect()
        } else {
            (0..nt).map(f).collect()
        }
    }

    fn scatter_scalar(&self, locals: &[[f64; 36]]) -> CsrMatrix {
        let mut m = self.scalar_pattern().zeroed();
        let vals = m.values_mut();
        for (t, loc) in locals.iter().enumerate() {
            for (p, v) in self.element_positions(t).iter().zip(loc) {
                vals[*p] += v;
            }
        }
        m
    }
}

/// Values and gradients at one quadrature point of one element.
struct Qp {
    jw: f64,
    phi: [f64; 6],
    grad: [[f64; 6]; 2],
}

fn quad_points(geo: &ElementGeometry) -> impl Iterator<Item = Qp> + '_ {
    let tab = ref_tables();
    tab.rule.iter().zip(&tab.values).map(move |(qp, phi)| {
        let g = p2_gradients(qp.bary, &geo.grad_bary);
        Qp {
            jw: qp.weight * geo.area,
            phi: *phi,
            grad: [std::array::from_fn(|k| g[k][0]), std::array::from_fn(|k| g[k][1])],
        }
    })
}

fn eval(coef: &[f64; 6], basis: &[f64; 6]) -> f64 {
    coef.iter().zip(basis).map(|(a, b)| a * b).sum()
}

/// Velocity gradient `G[c][d] = ∂u_c/∂x_d` at a quadrature point.
fn eval_grad(u: &[[f64; 6]; 2], q: &Qp) -> [[f64; 2]; 2] {
    std::array::from_fn(|c| std::array::from_fn(|d| eval(&u[c], &q.grad[d])))
}

fn frobenius(g: &[[f64; 2]; 2]) -> f64 {
    (g[0][0] * g[0][0] + g[0][1] * g[0][1] + g[1][0] * g[1][0] + g[1][1] * g[1][1]).sqrt()
}

/// Local mass and stiffness matrices of one element (row-major 6x6).
pub fn local_mass_stiffness(geo: &ElementGeometry) -> ([f64; 36], [f64; 36]) {
    let mut m = [0.0; 36];
    let mut a = [0.0; 36];
    for q in quad_points(geo) {
        for i in 0..6 {
            for j in 0..6 {
                m[6 * i + j] += q.jw * q.phi[i] * q.phi[j];
                a[6 * i + j] += q.jw * (q.grad[0][i] * q.grad[0][j] + q.grad[1][i] * q.grad[1][j]);
            }
        }
    }
    (m, a)
}

pub fn assemble_constant_forms(space: &MixedSpace) -> AssembledForms {
    type Local = ([f64; 36], [f64; 36], [[f64; 18]; 2], f64);
    let locals: Vec<Local> = space.element_map(|t| {
        let geo = space.element_geometry(t);
        let (m, a) = local_mass_stiffness(&geo);
        let mut b = [[0.0; 18]; 2];
        let tab = ref_tables();
        for (q, qp) in quad_points(&geo).zip(&tab.rule) {
            for (c, bc) in b.iter_mut().enumerate() {
                for r in 0..3 {
                    for j in 0..6 {
                        bc[6 * r + j] += q.jw * qp.bary[r] * q.grad[c][j];
                    }
                }
            }
        }
        (m, a, b, geo.area)
    });

    let mut mass = space.scalar_pattern().zeroed();
    let mut stiffness = space.scalar_pattern().zeroed();
    let mut div = [space.div_pattern().zeroed(), space.div_pattern().zeroed()];
    let mut pressure_mass = vec![0.0; space.n_pres()];
    for (t, (m, a, b, area)) in locals.iter().enumerate() {
        let pos = space.element_positions(t);
        {
            let mv = mass.values_mut();
            for k in 0..36 {
                mv[pos[k]] += m[k];
            }
        }
        {
            let av = stiffness.values_mut();
            for k in 0..36 {
                av[pos[k]] += a[k];
            }
        }
        let dpos = space.div_positions(t);
        for c in 0..2 {
            let dv = div[c].values_mut();
            for k in 0..18 {
                dv[dpos[k]] += b[c][k];
            }
        }
        for &v in &space.mesh().triangles()[t] {
            pressure_mass[v] += area / 3.0;
        }
    }
    AssembledForms { mass, stiffness, div, pressure_mass, quadrature: QUADRATURE }
}

/// `b(a, b, c) = ½(a·∇b, c) − ½(a·∇c, b)` evaluated directly from the fields.
pub fn apply_trilinear(space: &MixedSpace, a: &[f64], b: &[f64], c: &[f64]) -> Result<f64, FemError> {
    space.check_velocity(a)?;
    space.check_velocity(b)?;
    space.check_velocity(c)?;
    let parts = space.element_map(|t| {
        let geo = space.element_geometry(t);
        let (ae, be, ce) = (space.gather(a, t), space.gather(b, t), space.gather(c, t));
        let mut s = 0.0;
        for q in quad_points(&geo) {
            let av = [eval(&ae[0], &q.phi), eval(&ae[1], &q.phi)];
            let bv = [eval(&be[0], &q.phi), eval(&be[1], &q.phi)];
            let cv = [eval(&ce[0], &q.phi), eval(&ce[1], &q.phi)];
            let gb = eval_grad(&be, &q);
            let gc = eval_grad(&ce, &q);
            let mut term = 0.0;
            for d in 0..2 {
                let a_grad_b = av[0] * gb[d][0] + av[1] * gb[d][1];
                let a_grad_c = av[0] * gc[d][0] + av[1] * gc[d][1];
                term += a_grad_b * cv[d] - a_grad_c * bv[d];
            }
            s += 0.5 * q.jw * term;
        }
        s
    });
    Ok(parts.iter().sum())
}

/// Scalar matrix `N` with `wᵀ diag(N, N) v = b(u_adv, v, w)`; skew-symmetric.
pub fn assemble_advection(space: &MixedSpace, u_adv: &[f64]) -> Result<CsrMatrix, FemError> {
    space.check_velocity(u_adv)?;
    let locals = space.element_map(|t| {
        let geo = space.element_geometry(t);
        let ue = space.gather(u_adv, t);
        let mut n = [0.0; 36];
        for q in quad_points(&geo) {
            let u = [eval(&ue[0], &q.phi), eval(&ue[1], &q.phi)];
            let conv: [f64; 6] = std::array::from_fn(|k| u[0] * q.grad[0][k] + u[1] * q.grad[1][k]);
            for i in 0..6 {
                for j in 0..6 {
                    n[6 * i + j] += 0.5 * q.jw * (conv[j] * q.phi[i] - conv[i] * q.phi[j]);
                }
            }
        }
        n
    });
    Ok(space.scatter_scalar(&locals))
}

/// Scalar matrix `S` with `wᵀ diag(S, S) v = ∫ (C_s δ)² |∇u_lin| ∇v : ∇w`.
pub fn assemble_eddy_viscosity(space: &MixedSpace, u_lin: &[f64], cs_delta_sq: f64) -> Result<CsrMatrix, FemError> {
    space.check_velocity(u_lin)?;
    if !(cs_delta_sq >= 0.0 && cs_delta_sq.is_finite()) {
        return Err(FemError::InvalidArgument(format!("(C_s delta)^2 must be finite and nonnegative, got {cs_delta_sq}")));
    }
    if cs_delta_sq == 0.0 {
        return Ok(space.scalar_pattern().zeroed());
    }
    let locals = space.element_map(|t| {
        let geo = space.element_geometry(t);
        let ue = space.gather(u_lin, t);
        let mut s = [0.0; 36];
        for q in quad_points(&geo) {
            let nu_t = cs_delta_sq * frobenius(&eval_grad(&ue, &q));
            for i in 0..6 {
                for j in 0..6 {
                    s[6 * i + j] += q.jw * nu_t * (q.grad[0][i] * q.grad[0][j] + q.grad[1][i] * q.grad[1][j]);
                }
            }
        }
        s
    });
    Ok(space.scatter_scalar(&locals))
}

/// `∫ |∇u|_F^p` by the degree-5 rule.
pub fn gradient_norm_integral(space: &MixedSpace, u: &[f64], p: f64) -> Result<f64, FemError> {
    Ok(gradient_norm_per_cell(space, u, p)?.iter().sum())
}

/// Per-triangle `∫_T |∇u|_F^p`.
pub fn gradient_norm_per_cell(space: &MixedSpace, u: &[f64], p: f64) -> Result<Vec<f64>, FemError> {
    space.check_velocity(u)?;
    Ok(space.element_map(|t| {
        let geo = space.element_geometry(t);
        let ue = space.gather(u, t);
        quad_points(&geo).map(|q| q.jw * frobenius(&eval_grad(&ue, &q)).powf(p)).sum()
    }))
}

/// Load vector `∫ f · φ` as a full velocity vector.
pub fn assemble_body_force<F>(space: &MixedSpace, f: F) -> Vec<f64>
where
    F: Fn(Point) -> [f64; 2] + Sync,
{
    let tab = ref_tables();
    let locals = space.element_map(|t| {
        let geo = space.element_geometry(t);
        let mut l = [[0.0; 6]; 2];
        for (qp, phi) in tab.rule.iter().zip(&tab.values) {
            let fx = f(geo.map(qp.bary));
            let jw = qp.weight * geo.area;
            for k in 0..6 {
                l[0][k] += jw * fx[0] * phi[k];
                l[1][k] += jw * fx[1] * phi[k];
            }
        }
        l
    });
    let n = space.n_nodes();
    let mut out = vec![0.0; 2 * n];
    for (t, l) in locals.iter().enumerate() {
        for (k, &node) in space.triangle_nodes(t).iter().enumerate() {
            out[node] += l[0][k];
            out[n + node] += l[1][k];
        }
    }
    out
}

/// Nodal interpolant at vertices and edge midpoints.
pub fn interpolate<G>(space: &MixedSpace, g: G) -> Vec<f64>
where
    G: Fn(Point) -> [f64; 2],
{
    let n = space.n_nodes();
    let mut out = vec![0.0; 2 * n];
    for (i, p) in space.node_coords().iter().enumerate() {
        let v = g(*p);
        out[i] = v[0];
        out[n + i] = v[1];
    }
    out
}

/// `‖u − g‖_{L²}` by the degree-5 rule.
pub fn l2_error<G>(space: &MixedSpace, u: &[f64], g: G) -> Result<f64, FemError>
where
    G: Fn(Point) -> [f64; 2] + Sync,
{
    space.check_velocity(u)?;
    let parts = space.element_map(|t| {
        let geo = space.element_geometry(t);
        let ue = space.gather(u, t);
        let tab = ref_tables();
        let mut s = 0.0;
        for (qp, phi) in tab.rule.iter().zip(&tab.values) {
            let e = g(geo.map(qp.bary));
            let dx = eval(&ue[0], phi) - e[0];
            let dz = eval(&ue[1], phi) - e[1];
            s += qp.weight * geo.area * (dx * dx + dz * dz);
        }
        s
    });
    Ok(parts.iter().sum::<f64>().sqrt())
}

/// Element-centroid value of `|∇u|_F` per triangle.
pub fn cell_gradient_norm(space: &MixedSpace, u: &[f64]) -> Result<Vec<f64>, FemError> {
    space.check_velocity(u)?;
    let bary = [1.0 / 3.0; 3];
    Ok((0..space.mesh().n_triangles())
        .map(|t| {
            let geo = space.element_geometry(t);
            let ue = space.gather(u, t);
            let g = p2_gradients(bary, &geo.grad_bary);
            let q = Qp {
                jw: 0.0,
                phi: p2_values(bary),
                grad: [std::array::from_fn(|k| g[k][0]), std::array::from_fn(|k| g[k][1])],
            };
            frobenius(&eval_grad(&ue, &q))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::mesh::{build_channel_mesh, ChannelSpec};

    /// Polynomial in barycentric coordinates: exponent triple -> coefficient.
    #[derive(Clone, Default)]
    struct Poly(BTreeMap<[u32; 3], f64>);

    impl Poly {
        fn var(i: usize) -> Poly {
            let mut e = [0; 3];
            e[i] = 1;
            Poly(BTreeMap::from([(e, 1.0)]))
        }
        fn constant(c: f64) -> Poly {
            Poly(BTreeMap::from([([0; 3], c)]))
        }
        fn add(&self, o: &Poly) -> Poly {
            let mut r = self.0.clone();
            for (e, c) in &o.0 {
                *r.entry(*e).or_insert(0.0) += c;
            }
            Poly(r)
        }
        fn scale(&self, s: f64) -> Poly {
            Poly(self.0.iter().map(|(e, c)| (*e, c * s)).collect())
        }
        fn mul(&self, o: &Poly) -> Poly {
            let mut r = BTreeMap::new();
            for (ea, ca) in &self.0 {
                for (eb, cb) in &o.0 {
                    let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
                    *r.entry(e).or_insert(0.0) += ca * cb;
                }
            }
            Poly(r)
        }
        /// Partial derivative with respect to the barycentric variable `i`.
        fn diff(&self, i: usize) -> Poly {
            let mut r = BTreeMap::new();
            for (e, c) in &self.0 {
                if e[i] > 0 {
                    let mut f = *e;
                    f[i] -= 1;
                    *r.entry(f).or_insert(0.0) += c * e[i] as f64;
                }
            }
            Poly(r)
        }
        /// Exact integral over a triangle of the given area.
        fn integrate(&self, area: f64) -> f64 {
            let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
            self.0
                .iter()
                .map(|(e, c)| c * 2.0 * area * fact(e[0]) * fact(e[1]) * fact(e[2]) / fact(e[0] + e[1] + e[2] + 2))
                .sum()
        }
    }

    fn basis_polys() -> Vec<Poly> {
        let l: Vec<Poly> = (0..3).map(Poly::var).collect();
        let mut b = Vec::new();
        for li in &l {
            b.push(li.mul(&li.scale(2.0).add(&Poly::constant(-1.0))));
        }
        for [i, j] in super::super::quadrature::LOCAL_EDGES {
            b.push(l[i].mul(&l[j]).scale(4.0));
        }
        b
    }

    #[test]
    fn local_matrices_match_exact_integration() {
        let geo = ElementGeometry::new([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let (m, a) = local_mass_stiffness(&geo);
        let b = basis_polys();
        for i in 0..6 {
            for j in 0..6 {
                let exact_m = b[i].mul(&b[j]).integrate(geo.area);
                let mut grad_dot = Poly::default();
                for p in 0..3 {
                    for q in 0..3 {
                        let g = geo.grad_bary[p][0] * geo.grad_bary[q][0] + geo.grad_bary[p][1] * geo.grad_bary[q][1];
                        grad_dot = grad_dot.add(&b[i].diff(p).mul(&b[j].diff(q)).scale(g));
                    }
                }
                let exact_a = grad_dot.integrate(geo.area);
                assert!((m[6 * i + j] - exact_m).abs() < 1e-14, "mass ({i},{j})");
                assert!((a[6 * i + j] - exact_a).abs() < 1e-14, "stiffness ({i},{j})");
            }
        }
    }

    fn channel_space(n: usize) -> MixedSpace {
        MixedSpace::new(build_channel_mesh(&ChannelSpec::new(1.0, n, n)).unwrap()).unwrap()
    }

    #[test]
    fn stiffness_examples() {
        let space = channel_space(4);
        let forms = assemble_constant_forms(&space);
        let one = interpolate(&space, |_| [1.0, 0.0]);
        assert!(block_quad(&forms.stiffness, &one).abs() < 1e-13);
        let shear = interpolate(&space, |p| [p[1], 0.0]);
        assert!((block_quad(&forms.stiffness, &shear) - 1.0).abs() < 1e-12);
        let strain = interpolate(&space, |p| [p[0], -p[1]]);
        assert!(forms.divergence(&strain).iter().all(|v| v.abs() < 1e-12));
        assert!((block_quad(&forms.mass, &one) - 1.0).abs() < 1e-13);
        assert!((forms.pressure_mass.iter().sum::<f64>() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn eddy_viscosity_examples() {
        let space = channel_space(4);
        let shear = interpolate(&space, |p| [p[1], 0.0]);
        let s = assemble_eddy_viscosity(&space, &shear, 1.0).unwrap();
        assert!((block_quad(&s, &shear) - 1.0).abs() < 1e-10);
        assert!(s.max_asymmetry() <= 1e-13 * s.max_abs());
        let zero = assemble_eddy_viscosity(&space, &shear, 0.0).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
        assert!(assemble_eddy_viscosity(&space, &shear, -1.0).is_err());
        assert!((gradient_norm_integral(&space, &shear, 3.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let mut space = channel_space(6);
        let u = interpolate(&space, |p| [(3.0 * p[1]).sin(), (2.0 * p[0]).cos() * p[1]]);
        let par = (assemble_constant_forms(&space), assemble_advection(&space, &u).unwrap());
        space.set_parallel(false);
        let seq = (assemble_constant_forms(&space), assemble_advection(&space, &u).unwrap());
        assert_eq!(par.0.mass, seq.0.mass);
        assert_eq!(par.0.div[1], seq.0.div[1]);
        assert_eq!(par.1, seq.1);
    }

    #[test]
    fn body_force_and_l2_error() {
        let space = channel_space(4);
        let f = assemble_body_force(&space, |_| [2.0, -1.0]);
        let n = space.n_nodes();
        assert!((f[..n].iter().sum::<f64>() - 2.0).abs() < 1e-13);
        assert!((f[n..].iter().sum::<f64>() + 1.0).abs() < 1e-13);
        let quad = |p: Point| [p[0] * p[1], p[1] * p[1]];
        let u = interpolate(&space, quad);
        assert!(l2_error(&space, &u, quad).unwrap() < 1e-14);
    }
}
