//! Restarted GMRES with right preconditioning.

use crate::fem::sparse::{dot, norm2};

#[derive(Debug, Clone, Copy)]
pub(crate) struct KrylovResult {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solves `A x = b` with `A` applied by `apply` and the preconditioner
/// `M⁻¹` by `precond`, starting from `x`. Stops once `‖b − A x‖ ≤ tol ‖b‖`
/// or after `max_iter` inner iterations.
pub(crate) fn gmres(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    precond: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> KrylovResult {
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return KrylovResult { iterations: 0, relative_residual: 0.0 };
    }
    let residual = |x: &[f64]| -> Vec<f64> { apply(x).iter().zip(b).map(|(ax, bi)| bi - ax).collect() };
    let mut iterations = 0;
    let mut r = residual(x);
    let mut rel = norm2(&r) / bnorm;
    while rel > tol && iterations < max_iter {
        let beta = norm2(&r);
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(restart);
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k = 0;
        while k < restart && iterations < max_iter {
            let zk = precond(&v[k]);
            let mut w = apply(&zk);
            z.push(zk);
            for (i, vi) in v.iter().enumerate() {
                let hik = dot(&w, vi);
                h[i][k] = hik;
                w.iter_mut().zip(vi).for_each(|(wj, vj)| *wj -= hik * vj);
            }
            let wn = norm2(&w);
            h[k + 1][k] = wn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let d = h[k][k].hypot(h[k + 1][k]);
            (cs[k], sn[k]) = if d == 0.0 { (1.0, 0.0) } else { (h[k][k] / d, h[k + 1][k] / d) };
            h[k][k] = d;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            iterations += 1;
            k += 1;
            if g[k].abs() <= tol * bnorm || wn == 0.0 {
                break;
            }
            v.push(w.iter().map(|wj| wj / wn).collect());
        }
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = ((i + 1)..k).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        for (yi, zi) in y.iter().zip(&z) {
            x.iter_mut().zip(zi).for_each(|(xj, zj)| *xj += yi * zj);
        }
        r = residual(x);
        let next = norm2(&r) / bnorm;
        if !(next < rel) && k > 0 && next > tol {
            rel = next;
            break;
        }
        rel = next;
    }
    debug_assert_eq!(x.len(), n);
    KrylovResult { iterations, relative_residual: rel }
}
