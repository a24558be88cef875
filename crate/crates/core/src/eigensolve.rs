//! Lowest eigenpairs of the pencil `(K, M)` on the whole grid and on each
//! well neighborhood, counting functions and spectral projections.
//!
//! The iterative solver is a restarted block Krylov method on `K^{-1} M`
//! with full reorthogonalization in the mass inner product and
//! Rayleigh-Ritz extraction against `K`. Small problems go to a dense
//! symmetric eigensolver.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatRef, Par};

use crate::linalg::{dense_generalized_eigen, dense_symmetric_eigen, norm2, weighted_dot, SpdSolver};
use crate::operator::DiscreteOperator;
use crate::rng::{rng_from_seed, symmetric_unit, Rng};
use crate::wells::WellPartition;

pub const DEFAULT_EIGEN_TOL: f64 = 1e-10;
pub const DEFAULT_EIGEN_SEED: u64 = 0x5eed_1a2c_e0f1_2345;
/// Problems at or below this size are always solved densely.
pub const DENSE_LIMIT: usize = 400;
/// Relative gap (in units of `V_bar`) below which neighbors are flagged as
/// numerically degenerate.
pub const DEGENERACY_GAP: f64 = 1e-10;

const MAX_RESTARTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenMethod {
    #[default]
    Auto,
    Krylov,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenOptions {
    pub tol: f64,
    pub seed: u64,
    pub method: EigenMethod,
    /// Block Krylov steps between restarts.
    pub block_steps: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: DEFAULT_EIGEN_TOL,
            seed: DEFAULT_EIGEN_SEED,
            method: EigenMethod::Auto,
            block_steps: 4,
        }
    }
}

impl EigenOptions {
    pub fn with_tol(tol: f64) -> Self {
        EigenOptions {
            tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Global,
    Well(usize),
}

impl Domain {
    pub fn tag(&self) -> String {
        match self {
            Domain::Global => "global".into(),
            Domain::Well(l) => format!("well_{l}"),
        }
    }
}

/// Eigenpairs of one operator. `vectors[j]` lives on the operator's degrees
/// of freedom, whose grid indices are `support`.
#[derive(Debug, Clone)]
pub struct EigenSet {
    pub domain: Domain,
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// `||K psi - lambda M psi||_2 / ||M psi||_2` per pair.
    pub residuals: Vec<f64>,
    /// Set when a neighboring value lies within `DEGENERACY_GAP * V_bar`.
    pub degenerate: Vec<bool>,
    pub support: Vec<usize>,
    pub grid_nodes: usize,
    /// Mass on the support.
    pub mass: Vec<f64>,
    pub seed: u64,
    pub method: EigenMethod,
    pub restarts: usize,
    /// Every eigenvalue strictly below this is present in `values`.
    pub complete_below: f64,
}

impl EigenSet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Eigenvector `j` zero-extended to the whole grid.
    pub fn extended(&self, j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.grid_nodes];
        for (&g, &x) in self.support.iter().zip(&self.vectors[j]) {
            out[g] = x;
        }
        out
    }

    /// `<f, psi_j>_M` for a grid-sized `f`.
    pub fn inner_with_grid(&self, j: usize, f: &[f64]) -> f64 {
        self.support
            .iter()
            .zip(&self.vectors[j])
            .zip(&self.mass)
            .map(|((&g, &x), &m)| f[g] * x * m)
            .sum()
    }

    pub fn max_orthonormality_error(&self) -> f64 {
        let k = self.len();
        let mut err: f64 = 0.0;
        for a in 0..k {
            for b in a..k {
                let g = weighted_dot(&self.vectors[a], &self.vectors[b], &self.mass);
                let target = if a == b { 1.0 } else { 0.0 };
                err = err.max((g - target).abs());
            }
        }
        err
    }

    /// Writes `domain_tag,index,value,residual`, one row per pair (1-based
    /// index).
    pub fn write_values_csv(&self, mut w: impl Write, header: bool) -> Result<()> {
        if header {
            writeln!(w, "domain_tag,index,value,residual")?;
        }
        let tag = self.domain.tag();
        for (j, (v, r)) in self.values.iter().zip(&self.residuals).enumerate() {
            writeln!(w, "{},{},{:.16e},{:.16e}", tag, j + 1, v, r)?;
        }
        Ok(())
    }

    /// Writes the zero-extended vectors as `node_index,psi_1,...`.
    pub fn write_vectors_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        write!(f, "node_index")?;
        for j in 0..self.len() {
            write!(f, ",psi_{}", j + 1)?;
        }
        writeln!(f)?;
        let ext: Vec<Vec<f64>> = (0..self.len()).map(|j| self.extended(j)).collect();
        for i in 0..self.grid_nodes {
            write!(f, "{i}")?;
            for v in &ext {
                write!(f, ",{:.16e}", v[i])?;
            }
            writeln!(f)?;
        }
        f.flush()?;
        Ok(())
    }
}

/// The `k` smallest eigenpairs of `K x = lambda M x`.
pub fn eig_smallest(op: &DiscreteOperator, k: usize, tol: f64) -> Result<EigenSet> {
    eig_smallest_with(op, k, &EigenOptions::with_tol(tol), Domain::Global)
}

pub fn eig_smallest_with(
    op: &DiscreteOperator,
    k: usize,
    opts: &EigenOptions,
    domain: Domain,
) -> Result<EigenSet> {
    let n = op.dof();
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if k > n {
        return Err(Error::KExceedsDof { k, dof: n });
    }
    if !op.is_nondegenerate() {
        return Err(Error::DegeneratePotential);
    }
    let use_dense = match opts.method {
        EigenMethod::Dense => true,
        EigenMethod::Krylov => false,
        EigenMethod::Auto => n <= DENSE_LIMIT || 3 * block_size(k, n) * (opts.block_steps + 1) > n,
    };
    let (values, vectors, residuals, restarts, method) = if use_dense {
        let (v, x, r) = dense_solve(op, k)?;
        (v, x, r, 0, EigenMethod::Dense)
    } else {
        let (v, x, r, s) = krylov_solve(op, k, opts)?;
        (v, x, r, s, EigenMethod::Krylov)
    };
    let values_last = values[k - 1];
    let gap = DEGENERACY_GAP * op.v_bar().max(f64::MIN_POSITIVE);
    let degenerate = (0..values.len())
        .map(|j| {
            (j > 0 && values[j] - values[j - 1] < gap)
                || (j + 1 < values.len() && values[j + 1] - values[j] < gap)
        })
        .collect();
    Ok(EigenSet {
        domain,
        values,
        vectors,
        residuals,
        degenerate,
        support: op.nodes().to_vec(),
        grid_nodes: op.grid_node_count(),
        mass: op.mass().to_vec(),
        seed: opts.seed,
        method,
        restarts,
        complete_below: if k == n { f64::INFINITY } else { values_last },
    })
}

/// Smallest eigenpairs until one exceeds `bound` (or the spectrum is
/// exhausted), starting from `k_min` pairs and doubling.
pub fn eig_up_to(op: &DiscreteOperator, bound: f64, k_min: usize, opts: &EigenOptions) -> Result<EigenSet> {
    let n = op.dof();
    let mut k = k_min.max(1).min(n);
    loop {
        let set = eig_smallest_with(op, k, opts, Domain::Global)?;
        if set.values[k - 1] > bound || k == n {
            return Ok(set);
        }
        k = (2 * k).min(n);
    }
}

fn block_size(k: usize, n: usize) -> usize {
    (k + (k / 2).max(4)).min(n)
}

fn residual(op: &DiscreteOperator, lambda: f64, x: &[f64]) -> f64 {
    let kx = op.stiffness().matvec(x);
    let mx: Vec<f64> = x.iter().zip(op.mass()).map(|(a, m)| a * m).collect();
    let r: Vec<f64> = kx.iter().zip(&mx).map(|(a, b)| a - lambda * b).collect();
    norm2(&r) / norm2(&mx)
}

/// Fixes the sign so that the entry of largest magnitude (first on ties) is
/// positive.
fn normalize_sign(x: &mut [f64]) {
    let mut best = 0;
    for (i, v) in x.iter().enumerate() {
        if v.abs() > x[best].abs() {
            best = i;
        }
    }
    if x[best] < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
}

type Pairs = (Vec<f64>, Vec<Vec<f64>>, Vec<f64>);

fn dense_solve(op: &DiscreteOperator, k: usize) -> Result<Pairs> {
    let (vals, vecs) = dense_generalized_eigen(&op.stiffness().to_dense(), op.mass())?;
    let mut vectors: Vec<Vec<f64>> = vecs.into_iter().take(k).collect();
    vectors.iter_mut().for_each(|v| normalize_sign(v));
    let values: Vec<f64> = vals.into_iter().take(k).collect();
    let residuals = values
        .iter()
        .zip(&vectors)
        .map(|(&l, x)| residual(op, l, x))
        .collect();
    Ok((values, vectors, residuals))
}

fn random_vector(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| symmetric_unit(rng)).collect()
}

fn mass_norms(v: MatRef<'_, f64>, mass: &[f64]) -> Vec<f64> {
    (0..v.ncols())
        .map(|j| {
            (0..v.nrows())
                .map(|i| v[(i, j)] * v[(i, j)] * mass[i])
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// Mass-orthonormal columns `q[.., 0..len]`.
struct Basis {
    q: Mat<f64>,
    len: usize,
}

impl Basis {
    fn new(n: usize, capacity: usize) -> Self {
        Basis {
            q: Mat::zeros(n, capacity),
            len: 0,
        }
    }

    fn cols(&self) -> MatRef<'_, f64> {
        self.q.as_ref().subcols(0, self.len)
    }

    /// One classical Gram-Schmidt pass of `x` against columns `from..len`;
    /// returns the mass norm before and after.
    fn project(&self, from: usize, x: &mut [f64], mass: &[f64]) -> (f64, f64) {
        let before = weighted_dot(x, x, mass).sqrt();
        let coeffs: Vec<f64> = (from..self.len)
            .map(|c| weighted_dot(self.q.col_as_slice(c), x, mass))
            .collect();
        for (c, &a) in (from..self.len).zip(&coeffs) {
            for (xi, qi) in x.iter_mut().zip(self.q.col_as_slice(c)) {
                *xi -= a * qi;
            }
        }
        (before, weighted_dot(x, x, mass).sqrt())
    }

    /// Appends the columns of `v`: two block Gram-Schmidt passes against the
    /// current basis, then column by column against the new columns. A column
    /// whose passes cancel most of it gets further passes against the whole
    /// basis; columns that collapse are replaced by random vectors.
    fn append(&mut self, mut v: Mat<f64>, mass: &[f64], rng: &mut Rng) {
        let n = v.nrows();
        let b = v.ncols();
        let old = self.len;
        let original = mass_norms(v.as_ref(), mass);
        let mut suspect = vec![false; b];
        if old > 0 {
            let mut prev = original.clone();
            for pass in 0..2 {
                let wv = Mat::from_fn(n, b, |i, j| v[(i, j)] * mass[i]);
                let mut c = Mat::<f64>::zeros(old, b);
                matmul(c.as_mut(), Accum::Replace, self.cols().transpose(), wv.as_ref(), 1.0, Par::Seq);
                matmul(v.as_mut(), Accum::Add, self.cols(), c.as_ref(), -1.0, Par::Seq);
                let now = mass_norms(v.as_ref(), mass);
                if pass == 1 {
                    suspect = now.iter().zip(&prev).map(|(a, p)| *a <= 0.7 * p).collect();
                }
                prev = now;
            }
        }
        for j in 0..b {
            if self.len == self.q.ncols() {
                return;
            }
            let mut x: Vec<f64> = v.col_as_slice(j).to_vec();
            let mut scale = original[j];
            let mut full = suspect[j];
            let mut tries = 0;
            loop {
                let mut ok = false;
                let mut norm = weighted_dot(&x, &x, mass).sqrt();
                if !full {
                    let (before, after) = self.project(old, &mut x, mass);
                    norm = after;
                    if after > 0.7 * before {
                        ok = true;
                    } else {
                        full = true;
                    }
                }
                if full {
                    for _ in 0..4 {
                        let (before, after) = self.project(0, &mut x, mass);
                        norm = after;
                        if after > 0.7 * before {
                            ok = true;
                            break;
                        }
                    }
                }
                if ok && norm > 1e-12 * scale {
                    let col = self.q.col_as_slice_mut(self.len);
                    for (q, xi) in col.iter_mut().zip(&x) {
                        *q = xi / norm;
                    }
                    self.len += 1;
                    break;
                }
                tries += 1;
                if tries > 5 {
                    break;
                }
                x = random_vector(rng, n);
                scale = weighted_dot(&x, &x, mass).sqrt();
                full = true;
            }
        }
    }
}

/// Factorization of `K - sigma M` for the current shift.
struct ShiftedSolver {
    sigma: f64,
    solver: SpdSolver,
}

impl ShiftedSolver {
    /// Factors `K - sigma M`; fails when the shifted matrix is not positive
    /// definite, i.e. when `sigma` is not below the smallest eigenvalue.
    fn new(op: &DiscreteOperator, sigma: f64) -> Result<Self> {
        let shift: Vec<f64> = op.mass().iter().map(|m| -sigma * m).collect();
        let a = op.stiffness().add_diagonal(&shift);
        let solver = if sigma == 0.0 {
            SpdSolver::new(&a, 1e-14)?
        } else {
            SpdSolver::cholesky(&a)?
        };
        Ok(ShiftedSolver { sigma, solver })
    }
}

/// Picks a shift below the smallest eigenvalue from the current Ritz values
/// and tries to factor it, backing off towards the old shift on failure.
fn update_shift(op: &DiscreteOperator, current: ShiftedSolver, theta: &[f64], p: usize) -> Result<ShiftedSolver> {
    if op.dof() > crate::linalg::DIRECT_SOLVE_LIMIT || theta.len() < 2 {
        return Ok(current);
    }
    let spread = theta[p.min(theta.len()) - 1] - theta[0];
    let mut target = theta[0] - 0.5 * spread;
    if !(target > current.sigma + 0.1 * (theta[0] - current.sigma)) {
        return Ok(current);
    }
    for _ in 0..4 {
        if let Ok(s) = ShiftedSolver::new(op, target) {
            return Ok(s);
        }
        target = current.sigma + 0.5 * (target - current.sigma);
    }
    Ok(current)
}

fn krylov_solve(op: &DiscreteOperator, k: usize, opts: &EigenOptions) -> Result<(Vec<f64>, Vec<Vec<f64>>, Vec<f64>, usize)> {
    let n = op.dof();
    let kmat = op.stiffness();
    let mass = op.mass();
    let mut shifted = ShiftedSolver::new(op, 0.0)?;
    let p = block_size(k, n);
    let capacity = p * (opts.block_steps + 1);
    let mut rng = rng_from_seed(opts.seed);
    let mut start = Mat::<f64>::zeros(n, p);
    for j in 0..p {
        for i in 0..n {
            start[(i, j)] = symmetric_unit(&mut rng);
        }
    }
    let mut worst = f64::INFINITY;
    for restart in 0..MAX_RESTARTS {
        let mut basis = Basis::new(n, capacity);
        basis.append(start, mass, &mut rng);
        let mut block_start = 0;
        for _ in 0..opts.block_steps {
            if basis.len >= n {
                break;
            }
            let width = (basis.len - block_start).min(n - basis.len);
            let mut next = Mat::from_fn(n, width, |i, j| basis.q[(i, block_start + j)] * mass[i]);
            shifted.solver.solve_in_place(next.as_mut())?;
            block_start = basis.len;
            basis.append(next, mass, &mut rng);
        }
        let m = basis.len;
        let mut kq = Mat::<f64>::zeros(n, m);
        for j in 0..m {
            kmat.matvec_into(basis.q.col_as_slice(j), kq.col_as_slice_mut(j));
        }
        let mut hm = Mat::<f64>::zeros(m, m);
        matmul(hm.as_mut(), Accum::Replace, basis.cols().transpose(), kq.as_ref(), 1.0, Par::Seq);
        let h: Vec<Vec<f64>> = (0..m)
            .map(|i| (0..m).map(|j| 0.5 * (hm[(i, j)] + hm[(j, i)])).collect())
            .collect();
        let (theta, z) = dense_symmetric_eigen(&h)?;
        let take = p.min(m);
        let zm = Mat::from_fn(m, take, |i, c| z[c][i]);
        let mut ritz = Mat::<f64>::zeros(n, take);
        matmul(ritz.as_mut(), Accum::Replace, basis.cols(), zm.as_ref(), 1.0, Par::Seq);
        if take >= k {
            let res: Vec<f64> = (0..k)
                .map(|j| residual(op, theta[j], ritz.col_as_slice(j)))
                .collect();
            worst = res.iter().copied().fold(0.0, f64::max);
            if worst <= opts.tol {
                let mut vectors: Vec<Vec<f64>> = (0..k).map(|j| ritz.col_as_slice(j).to_vec()).collect();
                for v in vectors.iter_mut() {
                    let s = weighted_dot(v, v, mass).sqrt();
                    v.iter_mut().for_each(|x| *x /= s);
                    normalize_sign(v);
                }
                let values = theta[..k].to_vec();
                let residuals = values
                    .iter()
                    .zip(&vectors)
                    .map(|(&l, x)| residual(op, l, x))
                    .collect();
                return Ok((values, vectors, residuals, restart));
            }
        }
        if restart < 3 {
            shifted = update_shift(op, shifted, &theta, p)?;
        }
        start = ritz;
    }
    Err(Error::NoConvergence {
        solver: "block krylov eigensolver",
        iterations: MAX_RESTARTS,
        residual: worst,
    })
}

/// One entry of the flattened localized spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalizedPair {
    pub cluster: usize,
    pub index: usize,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct LocalizedEigenSet {
    pub per_cluster: Vec<EigenSet>,
    /// All kept pairs sorted by value, then cluster, then index.
    pub flat: Vec<LocalizedPair>,
    pub grid_nodes: usize,
}

impl LocalizedEigenSet {
    /// Wraps a single eigenset (e.g. the global one) so that it can serve as
    /// a projection basis.
    pub fn from_single(set: EigenSet) -> Self {
        let flat = set
            .values
            .iter()
            .enumerate()
            .map(|(j, &value)| LocalizedPair {
                cluster: 0,
                index: j,
                value,
            })
            .collect();
        LocalizedEigenSet {
            grid_nodes: set.grid_nodes,
            per_cluster: vec![set],
            flat,
        }
    }

    /// Every localized eigenvalue strictly below this is present.
    pub fn complete_below(&self) -> f64 {
        self.per_cluster
            .iter()
            .map(|s| s.complete_below)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn values(&self) -> Vec<f64> {
        self.flat.iter().map(|p| p.value).collect()
    }

    pub fn vector(&self, pair: &LocalizedPair) -> Vec<f64> {
        self.per_cluster[pair.cluster].extended(pair.index)
    }

    pub fn write_values_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for (l, set) in self.per_cluster.iter().enumerate() {
            set.write_values_csv(&mut f, l == 0)?;
        }
        f.flush()?;
        Ok(())
    }
}

/// Solves the restricted problem on every `Omega_l` of the partition,
/// keeping all pairs at or below `mu_bar` and at least `k_per_well` per
/// cluster.
pub fn eig_localized(
    op: &DiscreteOperator,
    partition: &WellPartition,
    k_per_well: usize,
    mu_bar: f64,
    tol: f64,
) -> Result<LocalizedEigenSet> {
    eig_localized_with(op, partition, k_per_well, mu_bar, &EigenOptions::with_tol(tol))
}

pub fn eig_localized_with(
    op: &DiscreteOperator,
    partition: &WellPartition,
    k_per_well: usize,
    mu_bar: f64,
    opts: &EigenOptions,
) -> Result<LocalizedEigenSet> {
    if op.is_restricted() {
        return Err(Error::InvalidParameter("localized solves need the full-grid operator".into()));
    }
    if partition.omegas.is_empty() {
        return Err(Error::EmptyOmega(0));
    }
    let k_min = k_per_well.max(1);
    let per_cluster: Vec<EigenSet> = partition
        .omegas
        .par_iter()
        .enumerate()
        .map(|(l, omega)| {
            if omega.is_empty() {
                return Err(Error::EmptyOmega(l));
            }
            let sub = op.restrict(omega)?;
            let dof = sub.dof();
            let mut k = k_min.min(dof);
            loop {
                let mut set = eig_smallest_with(&sub, k, opts, Domain::Well(l))?;
                let below = set.values.iter().filter(|&&v| v <= mu_bar).count();
                if below < set.len() || k == dof {
                    let keep = below.max(k_min).min(set.len());
                    if keep < set.len() {
                        set.complete_below = set.values[keep];
                    }
                    set.values.truncate(keep);
                    set.vectors.truncate(keep);
                    set.residuals.truncate(keep);
                    set.degenerate.truncate(keep);
                    return Ok(set);
                }
                k = (2 * k).min(dof);
            }
        })
        .collect::<Result<_>>()?;
    let mut flat: Vec<LocalizedPair> = per_cluster
        .iter()
        .enumerate()
        .flat_map(|(l, s)| {
            s.values.iter().enumerate().map(move |(j, &value)| LocalizedPair {
                cluster: l,
                index: j,
                value,
            })
        })
        .collect();
    flat.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then(a.cluster.cmp(&b.cluster))
            .then(a.index.cmp(&b.index))
    });
    Ok(LocalizedEigenSet {
        per_cluster,
        flat,
        grid_nodes: op.grid_node_count(),
    })
}

/// `N(lambda) = #{values <= lambda}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountingFunction {
    values: Vec<f64>,
}

pub fn counting(values: &[f64]) -> CountingFunction {
    let mut values = values.to_vec();
    values.sort_by(f64::total_cmp);
    CountingFunction { values }
}

impl CountingFunction {
    pub fn eval(&self, lambda: f64) -> usize {
        self.values.partition_point(|&v| v <= lambda)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Projection of a grid vector onto the localized eigenvectors with values
/// in the open window `(a, b)`. Returns the projection and
/// `||v - projection||_M^2`.
pub fn spectral_project(
    v: &[f64],
    set: &LocalizedEigenSet,
    mass: &[f64],
    window: (f64, f64),
) -> Result<(Vec<f64>, f64)> {
    let (a, b) = window;
    if !(a < b) {
        return Err(Error::InvalidParameter(format!("empty window ({a}, {b})")));
    }
    if v.len() != set.grid_nodes || mass.len() != set.grid_nodes {
        return Err(Error::LengthMismatch {
            expected: set.grid_nodes,
            got: v.len().min(mass.len()),
        });
    }
    let mut proj = vec![0.0; v.len()];
    for pair in set.flat.iter().filter(|p| a < p.value && p.value < b) {
        let es = &set.per_cluster[pair.cluster];
        let c = es.inner_with_grid(pair.index, v);
        for (&g, &x) in es.support.iter().zip(&es.vectors[pair.index]) {
            proj[g] += c * x;
        }
    }
    let resid = v
        .iter()
        .zip(&proj)
        .zip(mass)
        .map(|((x, p), m)| (x - p) * (x - p) * m)
        .sum();
    Ok((proj, resid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, IndexSet, Topology};
    use crate::operator::{assemble, CoefficientField};

    fn constant_torus(n: usize, p: usize, c: f64) -> DiscreteOperator {
        let g = build_grid(1, &[n], p, Topology::Torus).unwrap();
        let cf = CoefficientField::from_potential(vec![c; g.node_count()], None).unwrap();
        assemble(&g, &cf).unwrap()
    }

    #[test]
    fn circulant_spectrum() {
        for method in [EigenMethod::Dense, EigenMethod::Krylov] {
            let op = constant_torus(150, 4, 1.5);
            let n = op.dof() as f64;
            let h = 0.25;
            let opts = EigenOptions {
                method,
                ..Default::default()
            };
            let s = eig_smallest_with(&op, 5, &opts, Domain::Global).unwrap();
            assert_eq!(s.method, method);
            let l2 = 1.5 + 2.0 / (h * h) * (1.0 - (2.0 * std::f64::consts::PI / n).cos());
            assert!((s.values[0] - 1.5).abs() < 1e-10);
            assert!((s.values[1] - l2).abs() < 1e-9 * l2);
            assert!((s.values[2] - l2).abs() < 1e-9 * l2);
            assert!(s.degenerate[1] && s.degenerate[2] && !s.degenerate[0]);
            assert!(s.residuals.iter().all(|&r| r <= DEFAULT_EIGEN_TOL));
            assert!(s.max_orthonormality_error() < 1e-10);
        }
    }

    #[test]
    fn shifted_factorization_rejects_shift_above_bottom() {
        let op = constant_torus(50, 2, 1.5);
        assert!(ShiftedSolver::new(&op, 1.4).is_ok());
        assert!(ShiftedSolver::new(&op, 1.6).is_err());
    }

    #[test]
    fn k_exceeds_dof() {
        let op = constant_torus(2, 1, 1.0);
        assert!(matches!(eig_smallest(&op, 3, 1e-10), Err(Error::KExceedsDof { k: 3, dof: 2 })));
    }

    #[test]
    fn dirichlet_path() {
        let g = build_grid(1, &[60], 1, Topology::Torus).unwrap();
        let cf = CoefficientField::from_potential(vec![0.0; 60], Some(1.0)).unwrap();
        let op = assemble(&g, &cf).unwrap();
        let nodes: Vec<usize> = (10..40).collect();
        let sub = op.restrict(&IndexSet::new(nodes)).unwrap();
        let s = eig_smallest(&sub, 4, 1e-10).unwrap();
        for (j, v) in s.values.iter().enumerate() {
            let exact = 2.0 * (1.0 - ((j + 1) as f64 * std::f64::consts::PI / 31.0).cos());
            assert!((v - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn counting_examples() {
        let c = counting(&[3.0, 1.0, 2.0]);
        assert_eq!(c.eval(2.5), 2);
        assert_eq!(c.eval(2.0), 2);
        assert_eq!(c.eval(0.5), 0);
        assert_eq!(counting(&[]).eval(1e9), 0);
        assert_eq!(counting(&[1.0, 1.0]).eval(1.0), 2);
    }
}
