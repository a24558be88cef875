//! Sparse storage, SPD solves and small dense helpers.
//!
//! Sparse Cholesky and dense symmetric eigendecompositions are delegated to
//! `faer`. All faer calls run sequentially so results do not depend on the
//! thread count of the host.

use std::sync::Once;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Par, Side};

use crate::error::{Error, Result};

static FAER_SEQUENTIAL: Once = Once::new();

fn ensure_sequential() {
    FAER_SEQUENTIAL.call_once(|| faer::set_global_parallelism(Par::Seq));
}

/// Above this many unknowns the SPD solver switches to preconditioned CG.
pub const DIRECT_SOLVE_LIMIT: usize = 300_000;

/// Compressed sparse row matrix, square.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(col, value)` lists. Duplicates are summed in the
    /// order they appear, so mirrored insertions stay bitwise symmetric.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col = Vec::new();
        let mut val = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            // stable: duplicates keep insertion order before being summed
            row.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut s = row[k].1;
                k += 1;
                while k < row.len() && row[k].0 == c {
                    s += row[k].1;
                    k += 1;
                }
                col.push(c);
                val.push(s);
            }
            row_ptr.push(col.len());
        }
        CsrMatrix {
            n,
            row_ptr,
            col,
            val,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col[a..b].iter().copied().zip(self.val[a..b].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.col[a..b].binary_search(&j) {
            Ok(k) => self.val[a + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.val[k] * x[self.col[k]];
            }
            *yi = s;
        }
    }

    /// Principal submatrix on the sorted index list `keep`.
    pub fn principal_submatrix(&self, keep: &[usize]) -> CsrMatrix {
        let mut local = vec![usize::MAX; self.n];
        for (l, &g) in keep.iter().enumerate() {
            local[g] = l;
        }
        let rows = keep
            .iter()
            .map(|&g| {
                self.row(g)
                    .filter(|&(c, _)| local[c] != usize::MAX)
                    .map(|(c, v)| (local[c], v))
                    .collect()
            })
            .collect();
        CsrMatrix::from_rows(rows)
    }

    /// Adds `d[i]` to each diagonal entry.
    pub fn add_diagonal(&self, d: &[f64]) -> CsrMatrix {
        let rows = (0..self.n)
            .map(|i| {
                let mut r: Vec<(usize, f64)> = self.row(i).collect();
                r.push((i, d[i]));
                r
            })
            .collect();
        CsrMatrix::from_rows(rows)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (c, v) in self.row(i) {
                row[c] += v;
            }
        }
        d
    }

    pub fn is_bitwise_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| self.get(j, i).to_bits() == v.to_bits()))
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                t.push(Triplet::new(i, j, v));
            }
        }
        SparseColMat::try_new_from_triplets(self.n, self.n, &t)
            .map_err(|e| Error::Factorization(format!("{e:?}")))
    }
}

/// Solver for `A x = b` with `A` symmetric positive definite.
pub enum SpdSolver {
    Cholesky(faer::sparse::linalg::solvers::Llt<usize, f64>),
    Cg {
        matrix: CsrMatrix,
        inv_diag: Vec<f64>,
        tol: f64,
        max_iter: usize,
    },
}

impl std::fmt::Debug for SpdSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SpdSolver::Cholesky(_) => write!(f, "SpdSolver::Cholesky"),
            SpdSolver::Cg { tol, .. } => write!(f, "SpdSolver::Cg(tol={tol:e})"),
        }
    }
}

impl SpdSolver {
    /// Sparse Cholesky up to [`DIRECT_SOLVE_LIMIT`] unknowns, Jacobi-PCG above.
    pub fn new(a: &CsrMatrix, cg_tol: f64) -> Result<Self> {
        if a.dim() <= DIRECT_SOLVE_LIMIT {
            Self::cholesky(a)
        } else {
            Ok(Self::cg(a, cg_tol))
        }
    }

    pub fn cholesky(a: &CsrMatrix) -> Result<Self> {
        ensure_sequential();
        let m = a.to_faer()?;
        let llt = m
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        Ok(SpdSolver::Cholesky(llt))
    }

    pub fn cg(a: &CsrMatrix, tol: f64) -> Self {
        let inv_diag = a.diagonal().iter().map(|&d| 1.0 / d).collect();
        SpdSolver::Cg {
            matrix: a.clone(),
            inv_diag,
            tol,
            max_iter: 20 * a.dim().max(100),
        }
    }

    pub fn is_direct(&self) -> bool {
        matches!(self, SpdSolver::Cholesky(_))
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        match self {
            SpdSolver::Cholesky(llt) => {
                let mut x = Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i]);
                llt.solve_in_place(x.as_mut());
                Ok((0..b.len()).map(|i| x[(i, 0)]).collect())
            }
            SpdSolver::Cg {
                matrix,
                inv_diag,
                tol,
                max_iter,
            } => pcg(matrix, inv_diag, b, *tol, *max_iter).map(|(x, _)| x),
        }
    }

    /// Overwrites each column of `x` with the solution for that right-hand side.
    pub fn solve_in_place(&self, mut x: faer::MatMut<'_, f64>) -> Result<()> {
        match self {
            SpdSolver::Cholesky(llt) => {
                llt.solve_in_place(x);
                Ok(())
            }
            SpdSolver::Cg { .. } => {
                for j in 0..x.ncols() {
                    let b: Vec<f64> = (0..x.nrows()).map(|i| x[(i, j)]).collect();
                    let sol = self.solve(&b)?;
                    for (i, v) in sol.into_iter().enumerate() {
                        x[(i, j)] = v;
                    }
                }
                Ok(())
            }
        }
    }

    /// Solves for several right-hand sides at once; `cols[c]` is one column.
    pub fn solve_many(&self, cols: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        match self {
            SpdSolver::Cholesky(llt) if !cols.is_empty() => {
                let n = cols[0].len();
                let mut x = Mat::<f64>::from_fn(n, cols.len(), |i, j| cols[j][i]);
                llt.solve_in_place(x.as_mut());
                Ok((0..cols.len())
                    .map(|j| (0..n).map(|i| x[(i, j)]).collect())
                    .collect())
            }
            _ => cols.iter().map(|c| self.solve(c)).collect(),
        }
    }
}

/// Jacobi-preconditioned conjugate gradients. Returns the solution and the
/// iteration count; stops when `||b - A x|| <= tol * ||b||`.
pub fn pcg(
    a: &CsrMatrix,
    inv_diag: &[f64],
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, 0));
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        a.matvec_into(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rnorm = norm2(&r);
        if rnorm <= tol * bnorm {
            return Ok((x, it));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let res = norm2(&r) / bnorm;
    Err(Error::NoConvergence {
        solver: "pcg",
        iterations: max_iter,
        residual: res,
    })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `sum_i a_i b_i w_i`
pub fn weighted_dot(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    a.iter().zip(b).zip(w).map(|((x, y), m)| x * y * m).sum()
}

/// Eigen-decomposition of a dense symmetric matrix given row-major as
/// `a[i][j]`; returns ascending eigenvalues and the eigenvectors as columns
/// (`vecs[k]` is the k-th eigenvector).
pub fn dense_symmetric_eigen(a: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    ensure_sequential();
    let n = a.len();
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let m = Mat::<f64>::from_fn(n, n, |i, j| a[i][j]);
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::NoConvergence {
            solver: "dense symmetric eigen",
            iterations: 0,
            residual: f64::NAN,
        })?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| s[x].total_cmp(&s[y]));
    let vals = order.iter().map(|&k| s[k]).collect();
    let vecs = order
        .iter()
        .map(|&k| (0..n).map(|i| u[(i, k)]).collect())
        .collect();
    Ok((vals, vecs))
}

/// Dense eigen-decomposition of the pencil `(A, diag(mass))`.
///
/// Eigenvectors are returned mass-orthonormal.
pub fn dense_generalized_eigen(
    a: &[Vec<f64>],
    mass: &[f64],
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = a.len();
    let s: Vec<f64> = mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    let scaled: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| s[i] * a[i][j] * s[j]).collect())
        .collect();
    let (vals, vecs) = dense_symmetric_eigen(&scaled)?;
    let vecs = vecs
        .into_iter()
        .map(|v| v.iter().zip(&s).map(|(x, si)| x * si).collect())
        .collect();
    Ok((vals, vecs))
}

/// Dense Cholesky solve used by test oracles and tiny systems.
pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    ensure_sequential();
    let n = a.len();
    let m = Mat::<f64>::from_fn(n, n, |i, j| a[i][j]);
    let mut x = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
    let lu = m.partial_piv_lu();
    lu.solve_in_place(x.as_mut());
    Ok((0..n).map(|i| x[(i, 0)]).collect())
}
