//! Lowest eigenpairs of sparse Hermitian matrices.
//!
//! [`krylov_lowest`] is a Lanczos iteration with full (two-pass Gram–Schmidt)
//! reorthogonalization, restarts from the current Ritz vector, and explicit
//! deflation: each converged pair is locked and the next run is kept
//! orthogonal to it, so degenerate eigenvalues come out with their full
//! multiplicity. [`dense_spectrum`] is the small-matrix oracle.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{vdot, vnorm, OperatorMatrix, C64};

pub const DEFAULT_DENSE_THRESHOLD: usize = 3000;
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-7;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 20_000;

/// Krylov subspace size before a restart.
const KRYLOV_DIM: usize = 100;
/// Steps between convergence checks.
const CHECK_EVERY: usize = 5;
/// Below this dimension [`lowest_eigenpairs`] diagonalizes densely.
const DENSE_PREFERRED_DIM: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Dense,
    Krylov,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub dense_threshold: usize,
    pub cluster_tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            seed: 7,
            dense_threshold: DEFAULT_DENSE_THRESHOLD,
            cluster_tol: DEFAULT_CLUSTER_TOL,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<f64>,
    /// ‖Hv − λv‖ / ‖H‖ per pair, with ‖H‖ the row-sum bound.
    pub residuals: Vec<f64>,
    pub multiplicities: Vec<usize>,
    pub solver: SolverKind,
    /// Matrix-vector products (Krylov) or 1 (dense).
    pub iterations: usize,
    pub seed: u64,
    pub converged: bool,
    pub norm_estimate: f64,
    /// Lowest Ritz value at every convergence check of the first pair.
    #[serde(skip)]
    pub ritz_history: Vec<f64>,
    #[serde(skip)]
    pub eigenvectors: Vec<DVector<C64>>,
}

impl SpectrumResult {
    pub fn lowest(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// Cluster index of every eigenvalue.
    pub fn cluster_ids(&self) -> Vec<usize> {
        self.multiplicities.iter().enumerate().flat_map(|(c, &m)| std::iter::repeat_n(c, m)).collect()
    }

    /// (eigenvalue, residual, cluster id) rows.
    pub fn rows(&self) -> Vec<(f64, f64, usize)> {
        self.eigenvalues.iter().zip(&self.residuals).zip(self.cluster_ids()).map(|((&e, &r), c)| (e, r, c)).collect()
    }
}

/// Greedy clustering of ascending values: neighbours within
/// `cluster_tol·(1+|λ|)` share a cluster.
pub fn degeneracy_clusters(values: &[f64], cluster_tol: f64) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < values.len() {
        let mut j = i + 1;
        while j < values.len() && values[j] - values[j - 1] <= cluster_tol * (1.0 + values[j].abs()) {
            j += 1;
        }
        out.push(j - i);
        i = j;
    }
    out
}

fn check_hermitian(h: &OperatorMatrix) -> Result<()> {
    let r = h.hermiticity_residual();
    if r > 1e-12 {
        return Err(Error::NotHermitian(r));
    }
    Ok(())
}

fn relative_residual(h: &OperatorMatrix, lambda: f64, v: &[C64], norm: f64) -> f64 {
    let hv = h.matvec(v);
    let r: f64 = hv.iter().zip(v).map(|(a, b)| (a - b * lambda).norm_sqr()).sum::<f64>().sqrt();
    r / norm.max(f64::MIN_POSITIVE) / vnorm(v)
}

pub fn dense_spectrum(h: &OperatorMatrix, threshold: usize) -> Result<SpectrumResult> {
    if h.dim() > threshold {
        return Err(Error::DenseThreshold { dim: h.dim(), threshold });
    }
    check_hermitian(h)?;
    let eig = h.to_dense().symmetric_eigen();
    let mut order: Vec<usize> = (0..h.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let norm = h.norm_bound();
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors: Vec<DVector<C64>> = order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
    let residuals =
        eigenvalues.iter().zip(&eigenvectors).map(|(&l, v)| relative_residual(h, l, v.as_slice(), norm)).collect();
    Ok(SpectrumResult {
        multiplicities: degeneracy_clusters(&eigenvalues, DEFAULT_CLUSTER_TOL),
        eigenvalues,
        residuals,
        solver: SolverKind::Dense,
        iterations: 1,
        seed: 0,
        converged: true,
        norm_estimate: norm,
        ritz_history: Vec::new(),
        eigenvectors,
    })
}

/// Orthogonalizes `w` against every vector in `basis` (two passes).
fn orthogonalize(w: &mut [C64], basis: &[Vec<C64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = vdot(b, w);
            w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
    }
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize, locked: &[Vec<C64>]) -> Vec<C64> {
    loop {
        let mut v: Vec<C64> = (0..dim).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        orthogonalize(&mut v, locked);
        let n = vnorm(&v);
        if n > 1e-8 {
            v.iter_mut().for_each(|x| *x /= n);
            return v;
        }
    }
}

/// Lowest eigenpairs of the tridiagonal matrix with diagonal `a`, off-diagonal `b`.
fn tridiagonal_eigen(a: &[f64], b: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let m = a.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = a[i];
        if i + 1 < m {
            t[(i, i + 1)] = b[i];
            t[(i + 1, i)] = b[i];
        }
    }
    let eig = t.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

struct RunOutcome {
    vector: Vec<C64>,
    residual: f64,
}

/// One Lanczos run of at most `steps` steps, orthogonal to `locked`.
/// Returns the lowest Ritz pair with its true relative residual.
#[allow(clippy::too_many_arguments)]
fn lanczos_run(
    h: &OperatorMatrix,
    start: Vec<C64>,
    locked: &[Vec<C64>],
    steps: usize,
    tol: f64,
    norm: f64,
    matvecs: &mut usize,
    history: &mut Vec<f64>,
    record: bool,
) -> RunOutcome {
    let mut q: Vec<Vec<C64>> = vec![start];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut exhausted = false;
    loop {
        let j = q.len() - 1;
        let mut w = h.matvec(&q[j]);
        *matvecs += 1;
        let a = vdot(&q[j], &w).re;
        alpha.push(a);
        orthogonalize(&mut w, locked);
        orthogonalize(&mut w, &q);
        let b = vnorm(&w);
        let m = alpha.len();
        if b <= 1e-14 * norm {
            exhausted = true;
        }
        let check = exhausted || m >= steps || m.is_multiple_of(CHECK_EVERY);
        if check {
            let (vals, vecs) = tridiagonal_eigen(&alpha, &beta);
            if record {
                history.push(vals[0]);
            }
            let estimate = (b * vecs[(m - 1, 0)]).abs() / norm;
            if exhausted || m >= steps || estimate <= tol {
                let mut v = vec![C64::new(0.0, 0.0); h.dim()];
                for (i, qi) in q.iter().enumerate() {
                    let s = vecs[(i, 0)];
                    v.iter_mut().zip(qi).for_each(|(x, y)| *x += y * s);
                }
                orthogonalize(&mut v, locked);
                let n = vnorm(&v);
                v.iter_mut().for_each(|x| *x /= n);
                let hv = h.matvec(&v);
                *matvecs += 1;
                let value = vdot(&v, &hv).re;
                let residual = hv.iter().zip(&v).map(|(x, y)| (x - y * value).norm_sqr()).sum::<f64>().sqrt() / norm;
                return RunOutcome { vector: v, residual };
            }
        }
        beta.push(b);
        w.iter_mut().for_each(|x| *x /= b);
        q.push(w);
    }
}

pub fn krylov_lowest(
    h: &OperatorMatrix,
    n_eigs: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<SpectrumResult> {
    if n_eigs == 0 {
        return Err(Error::Solver("n_eigs must be at least 1".into()));
    }
    check_hermitian(h)?;
    let dim = h.dim();
    let n_eigs = n_eigs.min(dim);
    let norm = h.norm_bound().max(f64::MIN_POSITIVE);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut locked: Vec<Vec<C64>> = Vec::new();
    let mut matvecs = 0usize;
    let mut history = Vec::new();
    let mut converged = true;

    while locked.len() < n_eigs {
        let room = dim - locked.len();
        let steps = KRYLOV_DIM.min(room);
        let mut start = random_unit(&mut rng, dim, &locked);
        let run = loop {
            let record = locked.is_empty();
            let run_steps = steps.min(max_iter.saturating_sub(matvecs).max(1));
            let run = lanczos_run(h, start, &locked, run_steps, tol, norm, &mut matvecs, &mut history, record);
            if run.residual <= tol || run_steps == room || matvecs >= max_iter {
                break run;
            }
            start = run.vector;
        };
        if run.residual > tol {
            converged = false;
        }
        locked.push(run.vector);
        if matvecs >= max_iter && locked.len() < n_eigs {
            converged = false;
            break;
        }
    }

    // Rayleigh–Ritz on the locked vectors settles ordering within clusters.
    let k = locked.len();
    let hv: Vec<Vec<C64>> = locked.iter().map(|v| h.matvec(v)).collect();
    let small = DMatrix::from_fn(k, k, |i, j| vdot(&locked[i], &hv[j]));
    let small = (&small + small.adjoint()) * C64::new(0.5, 0.0);
    let eig = small.symmetric_eigen();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut eigenvalues = Vec::with_capacity(k);
    let mut eigenvectors = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for &c in &order {
        let mut v = vec![C64::new(0.0, 0.0); dim];
        for (i, li) in locked.iter().enumerate() {
            let s = eig.eigenvectors[(i, c)];
            v.iter_mut().zip(li).for_each(|(x, y)| *x += y * s);
        }
        let n = vnorm(&v);
        v.iter_mut().for_each(|x| *x /= n);
        let lambda = eig.eigenvalues[c];
        residuals.push(relative_residual(h, lambda, &v, norm));
        eigenvalues.push(lambda);
        eigenvectors.push(DVector::from_vec(v));
    }
    if residuals.iter().any(|&r| r > tol) {
        converged = false;
    }
    Ok(SpectrumResult {
        multiplicities: degeneracy_clusters(&eigenvalues, DEFAULT_CLUSTER_TOL),
        eigenvalues,
        residuals,
        solver: SolverKind::Krylov,
        iterations: matvecs,
        seed,
        converged,
        norm_estimate: norm,
        ritz_history: history,
        eigenvectors,
    })
}

/// Estimate of the spectral norm max|λ| from the extreme Ritz values of a
/// short fully reorthogonalized Lanczos run. Ritz values lie inside the
/// spectrum, so this never exceeds the true norm.
pub fn spectral_norm_estimate(h: &OperatorMatrix, steps: usize, seed: u64) -> f64 {
    let dim = h.dim();
    if dim == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = vec![random_unit(&mut rng, dim, &[])];
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let bound = h.norm_bound();
    for _ in 0..steps.min(dim).max(1) {
        let j = q.len() - 1;
        let mut w = h.matvec(&q[j]);
        alpha.push(vdot(&q[j], &w).re);
        orthogonalize(&mut w, &q);
        let b = vnorm(&w);
        if b <= 1e-14 * bound || alpha.len() >= steps.min(dim) {
            break;
        }
        beta.push(b);
        w.iter_mut().for_each(|x| *x /= b);
        q.push(w);
    }
    let (vals, _) = tridiagonal_eigen(&alpha, &beta);
    vals[0].abs().max(vals[vals.len() - 1].abs())
}

/// Lowest `n_eigs` pairs: dense when the matrix is small enough, Krylov otherwise.
pub fn lowest_eigenpairs(h: &OperatorMatrix, n_eigs: usize, settings: &SolverSettings) -> Result<SpectrumResult> {
    if h.dim() <= settings.dense_threshold.min(DENSE_PREFERRED_DIM) {
        let mut full = dense_spectrum(h, settings.dense_threshold)?;
        let n = n_eigs.min(full.eigenvalues.len());
        full.eigenvalues.truncate(n);
        full.residuals.truncate(n);
        full.eigenvectors.truncate(n);
        full.multiplicities = degeneracy_clusters(&full.eigenvalues, settings.cluster_tol);
        return Ok(full);
    }
    let mut r = krylov_lowest(h, n_eigs, settings.tol, settings.max_iter, settings.seed)?;
    r.multiplicities = degeneracy_clusters(&r.eigenvalues, settings.cluster_tol);
    Ok(r)
}

/// An orthonormal basis of the lowest eigenspace (all pairs within the
/// cluster tolerance of the lowest value), growing the request until the
/// cluster is closed.
pub fn ground_space(h: &OperatorMatrix, settings: &SolverSettings) -> Result<SpectrumResult> {
    let mut n = 4usize;
    loop {
        let mut r = lowest_eigenpairs(h, n, settings)?;
        let first = r.multiplicities[0];
        if first < r.eigenvalues.len() || r.eigenvalues.len() >= h.dim() {
            r.eigenvalues.truncate(first);
            r.residuals.truncate(first);
            r.eigenvectors.truncate(first);
            r.multiplicities.truncate(1);
            return Ok(r);
        }
        n *= 2;
    }
}
