//! Constrained saddle-point system and its sparse LU solve.
//!
//! Unknowns are the free velocity coefficients (periodic slaves folded into
//! their masters, Dirichlet values lifted to the right-hand side), the
//! periodically identified pressures and one multiplier enforcing `∫ p = 0`:
//!
//! ```text
//! [  K   −Bᵀ  0 ] [u]   [f − K_D g]
//! [ −B    0   m ] [p] = [  B_D g  ]
//! [  0    mᵀ  0 ] [λ]   [    0    ]
//! ```

use faer::linalg::solvers::SolveCore;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Col, Conj};

use super::krylov::gmres;
use crate::error::SolverError;
use crate::fem::{block_apply, AssembledForms, CsrMatrix, MixedSpace, NodeKind};

/// Relative residual targeted by iterative refinement.
const REFINE_TOL: f64 = 1e-12;
/// Relative residual above which the solve is declared a breakdown.
const BREAKDOWN_TOL: f64 = 1e-10;
const KRYLOV_RESTART: usize = 40;
/// Iterations allowed with a stale factorization before refactorizing.
const LAGGED_MAX_ITERS: usize = 40;
/// Iteration count that schedules a fresh factorization for the next solve.
const REFACTOR_AFTER: usize = 12;

#[derive(Debug, Clone)]
pub struct SaddleSolution {
    /// Full velocity vector including Dirichlet and periodic copies.
    pub u: Vec<f64>,
    /// Full pressure vector, zero mean.
    pub p: Vec<f64>,
    /// Zero-mean multiplier (vanishes for compatible data).
    pub multiplier: f64,
    /// Final relative residual of the reduced system.
    pub residual: f64,
}

/// Saddle-point structure of one space; the symbolic factorization is
/// computed once and reused for every velocity block with the same pattern.
pub struct SaddleSolver {
    nf: usize,
    npf: usize,
    matrix: CsrMatrix,
    base: Vec<f64>,
    k_map: Vec<(usize, usize, usize)>,
    symbolic: SymbolicLu<usize>,
    lu: Option<Lu<usize, f64>>,
    reuse: bool,
    refactor_next: bool,
    factorizations: usize,
    krylov_iterations: usize,
}

impl std::fmt::Debug for SaddleSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SaddleSolver")
            .field("n", &self.matrix.nrows())
            .field("nnz", &self.matrix.nnz())
            .finish()
    }
}

impl SaddleSolver {
    pub fn new(space: &MixedSpace, forms: &AssembledForms) -> Result<Self, SolverError> {
        let nf = space.n_vel_free_nodes();
        let npf = space.n_pres_free();
        let n = 2 * nf + npf + 1;
        let kpat = space.scalar_pattern();
        let mut trip: Vec<(usize, usize, f64)> = Vec::new();
        for i in 0..space.n_nodes() {
            let NodeKind::Free(ri) = space.node_kind(i) else { continue };
            for (j, _) in kpat.row(i) {
                if let NodeKind::Free(rj) = space.node_kind(j) {
                    trip.push((ri, rj, 0.0));
                    trip.push((nf + ri, nf + rj, 0.0));
                }
            }
        }
        let pidx = space.pressure_index();
        for (c, div) in forms.div.iter().enumerate() {
            for a in 0..space.n_pres() {
                let q = 2 * nf + pidx[a];
                for (j, v) in div.row(a) {
                    if let NodeKind::Free(rj) = space.node_kind(j) {
                        trip.push((q, c * nf + rj, -v));
                        trip.push((c * nf + rj, q, -v));
                    }
                }
            }
        }
        let pm = space.fold_pressure(&forms.pressure_mass);
        for (q, m) in pm.iter().enumerate() {
            trip.push((2 * nf + q, n - 1, *m));
            trip.push((n - 1, 2 * nf + q, *m));
        }
        let matrix = CsrMatrix::from_triplets(n, n, &trip);
        let base = matrix.values().to_vec();

        let mut k_map = Vec::new();
        for i in 0..space.n_nodes() {
            let NodeKind::Free(ri) = space.node_kind(i) else { continue };
            for k in kpat.row_ptr()[i]..kpat.row_ptr()[i + 1] {
                let j = kpat.col_idx()[k];
                if let NodeKind::Free(rj) = space.node_kind(j) {
                    let d0 = matrix.position(ri, rj).expect("velocity block pattern");
                    let d1 = matrix.position(nf + ri, nf + rj).expect("velocity block pattern");
                    k_map.push((k, d0, d1));
                }
            }
        }

        // The CSR arrays read as CSC describe the transpose, which has the
        // same (structurally symmetric) pattern.
        let sym = SymbolicSparseColMatRef::new_checked(n, n, matrix.row_ptr(), None, matrix.col_idx());
        let symbolic =
            SymbolicLu::try_new(sym).map_err(|e| SolverError::Factorization(format!("symbolic analysis: {e:?}")))?;
        Ok(SaddleSolver {
            nf,
            npf,
            matrix,
            base,
            k_map,
            symbolic,
            lu: None,
            reuse: true,
            refactor_next: false,
            factorizations: 0,
            krylov_iterations: 0,
        })
    }

    /// Size of the reduced system.
    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    /// Solves with scalar velocity block `k` (acting as `diag(k, k)`),
    /// full right-hand side `f` and full boundary vector `g` (zero off the
    /// Dirichlet nodes).
    pub fn solve(
        &mut self,
        space: &MixedSpace,
        forms: &AssembledForms,
        k: &CsrMatrix,
        f: &[f64],
        g: &[f64],
    ) -> Result<SaddleSolution, SolverError> {
        if !k.same_pattern(space.scalar_pattern()) {
            return Err(SolverError::InvalidConfig("velocity block does not match the space pattern".into()));
        }
        space.check_velocity(f)?;
        space.check_velocity(g)?;
        let (nf, npf) = (self.nf, self.npf);
        let n = self.matrix.nrows();

        let vals = self.matrix.values_mut();
        vals.copy_from_slice(&self.base);
        let kv = k.values();
        for &(src, d0, d1) in &self.k_map {
            vals[d0] += kv[src];
            vals[d1] += kv[src];
        }

        let mut lifted = f.to_vec();
        for (r, l) in lifted.iter_mut().zip(block_apply(k, g)) {
            *r -= l;
        }
        let mut rhs = space.fold_velocity(&lifted);
        rhs.extend(space.fold_pressure(&forms.divergence(g)));
        rhs.push(0.0);
        debug_assert_eq!(rhs.len(), n);

        let (x, residual) = self.factor_and_solve(&rhs)?;
        let (uf, rest) = x.split_at(2 * nf);
        let (pf, lambda) = rest.split_at(npf);
        let mut u = space.expand_velocity(uf, g);
        space.apply_periodic(&mut u);
        Ok(SaddleSolution {
            u,
            p: space.expand_pressure(pf),
            multiplier: lambda[0],
            residual,
        })
    }

    /// Number of numeric factorizations performed so far.
    pub fn factorizations(&self) -> usize {
        self.factorizations
    }

    /// Total preconditioned Krylov iterations performed so far.
    pub fn krylov_iterations(&self) -> usize {
        self.krylov_iterations
    }

    /// When enabled (the default), the last factorization preconditions
    /// GMRES on later systems and is refreshed only once the iteration
    /// count grows; otherwise every solve factorizes afresh.
    pub fn set_reuse_factorization(&mut self, reuse: bool) {
        self.reuse = reuse;
        if !reuse {
            self.lu = None;
        }
    }

    fn factor_and_solve(&mut self, rhs: &[f64]) -> Result<(Vec<f64>, f64), SolverError> {
        let n = self.matrix.nrows();
        if rhs.iter().all(|v| *v == 0.0) {
            return Ok((vec![0.0; n], 0.0));
        }
        if self.reuse && !self.refactor_next {
            if let Some(lu) = &self.lu {
                let mut x = lu_solve(lu, rhs);
                let res = gmres(
                    |v| self.matrix.mul_vec(v),
                    |v| lu_solve(lu, v),
                    rhs,
                    &mut x,
                    REFINE_TOL,
                    KRYLOV_RESTART,
                    LAGGED_MAX_ITERS,
                );
                self.krylov_iterations += res.iterations;
                if res.relative_residual <= REFINE_TOL && x.iter().all(|v| v.is_finite()) {
                    self.refactor_next = res.iterations > REFACTOR_AFTER;
                    return Ok((x, res.relative_residual));
                }
            }
        }

        let sym = SymbolicSparseColMatRef::new_checked(n, n, self.matrix.row_ptr(), None, self.matrix.col_idx());
        let mat = SparseColMatRef::new(sym, self.matrix.values());
        let lu = Lu::try_new_with_symbolic(self.symbolic.clone(), mat)
            .map_err(|e| SolverError::Factorization(format!("numeric factorization: {e:?}")))?;
        self.factorizations += 1;
        self.refactor_next = false;
        let mut x = lu_solve(&lu, rhs);
        if !x.iter().all(|v| v.is_finite()) {
            self.lu = None;
            return Err(SolverError::Factorization("singular saddle system (non-finite solution)".into()));
        }
        let res = gmres(|v| self.matrix.mul_vec(v), |v| lu_solve(&lu, v), rhs, &mut x, REFINE_TOL, KRYLOV_RESTART, 20);
        self.krylov_iterations += res.iterations;
        self.lu = if self.reuse { Some(lu) } else { None };
        let rel = res.relative_residual;
        if !(rel <= BREAKDOWN_TOL) {
            return Err(SolverError::Breakdown(rel));
        }
        Ok((x, rel))
    }
}

fn lu_solve(lu: &Lu<usize, f64>, r: &[f64]) -> Vec<f64> {
    let mut b = Col::<f64>::from_fn(r.len(), |i| r[i]);
    lu.solve_transpose_in_place_with_conj(Conj::No, b.as_mat_mut());
    (0..r.len()).map(|i| b[i]).collect()
}

/// One-shot saddle solve with velocity block `diag(k, k)`.
pub fn solve_saddle(
    space: &MixedSpace,
    forms: &AssembledForms,
    k: &CsrMatrix,
    f: &[f64],
    g: &[f64],
) -> Result<SaddleSolution, SolverError> {
    SaddleSolver::new(space, forms)?.solve(space, forms, k, f, g)
}
