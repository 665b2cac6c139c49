//! Step 2: graphical lasso with an off-diagonal-only l1 penalty.
//!
//! Maximizes `log det(Θ) - trace(Θ S) - λ ||Θ||_{1,off}` over positive
//! definite matrices by blockwise coordinate descent: sweep the columns, and
//! for each column solve the induced lasso subproblem by cyclic coordinate
//! descent with soft thresholding, updating the working covariance `W`
//! column in place. Because the penalty spares the diagonal, `diag(W)`
//! equals `diag(S)` exactly throughout.
//!
//! A solve reports its KKT residual — the exported ground truth of
//! convergence — and penalty selection is provided by EBIC ([`ebic_select`])
//! and stability selection ([`stars_select`]).

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use std::collections::BTreeSet;

use crate::{Error, Result};

/// Entries of the estimated precision matrix at or below this magnitude are
/// treated as structural zeros. The inner soft threshold produces exact
/// zeros, so any tiny cutoff works; this one just absorbs the final
/// symmetrization.
pub const ZERO_TOL: f64 = 1e-8;

/// Iteration knobs of the solver. `Default` carries the shipped values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Sweep stops when no W entry moved more than this.
    pub tol: f64,
    /// Maximum number of full column sweeps.
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-5,
            max_iter: 200,
        }
    }
}

/// Tolerance of the inner lasso coordinate descent.
const INNER_TOL: f64 = 1e-7;
const INNER_MAX_ITER: usize = 2000;

/// Solution of one penalized solve.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionEstimate {
    theta: DMatrix<f64>,
    w: DMatrix<f64>,
    lambda: f64,
    iterations: usize,
    kkt_residual: f64,
}

impl PrecisionEstimate {
    /// The estimated precision matrix (symmetric positive definite).
    pub fn theta(&self) -> &DMatrix<f64> {
        &self.theta
    }

    /// The estimated covariance (dual) matrix; `diag(w) = diag(S)` exactly.
    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Number of full sweeps performed.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// `max_{j≠k} ( |Θ_jk|>0 ? |W_jk - S_jk - λ·sign(Θ_jk)| :
    ///               max(0, |W_jk - S_jk| - λ) )`
    pub fn kkt_residual(&self) -> f64 {
        self.kkt_residual
    }

    pub fn p(&self) -> usize {
        self.theta.nrows()
    }
}

/// Undirected edge set over variable indices, kept as ordered pairs j < k.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EdgeSet {
    edges: BTreeSet<(usize, usize)>,
}

impl EdgeSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, j: usize, k: usize) {
        assert!(j != k, "self-loop ({j}, {j})");
        let e = if j < k { (j, k) } else { (k, j) };
        self.edges.insert(e);
    }

    pub fn contains(&self, j: usize, k: usize) -> bool {
        let e = if j < k { (j, k) } else { (k, j) };
        self.edges.contains(&e)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Ordered pairs (j, k) with j < k, ascending.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    /// Maximum number of edges meeting at one vertex.
    pub fn max_degree(&self, p: usize) -> usize {
        let mut deg = vec![0usize; p];
        for (j, k) in self.iter() {
            deg[j] += 1;
            deg[k] += 1;
        }
        deg.into_iter().max().unwrap_or(0)
    }
}

impl FromIterator<(usize, usize)> for EdgeSet {
    fn from_iter<T: IntoIterator<Item = (usize, usize)>>(iter: T) -> Self {
        let mut s = Self::new();
        for (j, k) in iter {
            s.insert(j, k);
        }
        s
    }
}

/// Edges read off a precision estimate: `{(j,k) : j<k, |θ_jk| > zero_tol}`.
pub fn edge_set(estimate: &PrecisionEstimate, zero_tol: f64) -> EdgeSet {
    edges_of(estimate.theta(), zero_tol)
}

/// Same pattern extraction for a plain matrix (used on ground truths too).
pub fn edges_of(m: &DMatrix<f64>, zero_tol: f64) -> EdgeSet {
    let mut out = EdgeSet::new();
    for j in 0..m.nrows() {
        for k in (j + 1)..m.ncols() {
            if m[(j, k)].abs() > zero_tol {
                out.insert(j, k);
            }
        }
    }
    out
}

/// The penalized objective `log det(Θ) - trace(ΘS) - λ ||Θ||_{1,off}`.
pub fn objective(s: &DMatrix<f64>, theta: &DMatrix<f64>, lambda: f64) -> Result<f64> {
    let chol = Cholesky::new(theta.clone())
        .ok_or_else(|| Error::Numerical("objective: theta not positive definite".into()))?;
    let logdet = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let trace = (theta * s).trace();
    let mut pen = 0.0;
    for j in 0..theta.nrows() {
        for k in 0..theta.ncols() {
            if j != k {
                pen += theta[(j, k)].abs();
            }
        }
    }
    Ok(logdet - trace - lambda * pen)
}

#[inline]
fn soft(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

fn validate_input(s: &DMatrix<f64>, lambda: f64) -> Result<()> {
    let p = s.nrows();
    if s.ncols() != p || p == 0 {
        return Err(Error::DimensionMismatch(format!(
            "input matrix must be square and nonempty, got {}x{}",
            p,
            s.ncols()
        )));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "penalty must be a finite nonnegative real, got {lambda}"
        )));
    }
    for j in 0..p {
        if !(s[(j, j)] > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "diagonal entry ({j}, {j}) = {} must be positive",
                s[(j, j)]
            )));
        }
        for k in (j + 1)..p {
            if (s[(j, k)] - s[(k, j)]).abs() > 1e-10 || !s[(j, k)].is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "input matrix asymmetric at ({j}, {k})"
                )));
            }
        }
    }
    Ok(())
}

/// Solves the graphical lasso at penalty `lambda`.
pub fn graphical_lasso(
    s: &DMatrix<f64>,
    lambda: f64,
    config: &SolverConfig,
) -> Result<PrecisionEstimate> {
    solve(s, lambda, config, None)
}

/// Like [`graphical_lasso`], recording the objective after every sweep.
/// Exposed for the solver's own property tests.
pub(crate) fn solve(
    s: &DMatrix<f64>,
    lambda: f64,
    config: &SolverConfig,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<PrecisionEstimate> {
    validate_input(s, lambda)?;
    let p = s.nrows();

    if lambda == 0.0 && Cholesky::new(s.clone()).is_none() {
        return Err(Error::Numerical(
            "unpenalized solve needs a positive definite input".into(),
        ));
    }

    if p == 1 {
        let theta = DMatrix::from_element(1, 1, 1.0 / s[(0, 0)]);
        return Ok(PrecisionEstimate {
            theta,
            w: s.clone(),
            lambda,
            iterations: 0,
            kkt_residual: 0.0,
        });
    }

    let mut w = s.clone();
    // column j of `betas` holds that block's lasso solution in the rows != j
    let mut betas = DMatrix::<f64>::zeros(p, p);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iter {
        iterations += 1;
        let mut max_change = 0.0_f64;

        for j in 0..p {
            let idx: Vec<usize> = (0..p).filter(|&m| m != j).collect();
            let w11 = w.select_rows(&idx).select_columns(&idx);
            let s12 = DVector::from_fn(p - 1, |r, _| s[(idx[r], j)]);

            let mut beta = DVector::from_fn(p - 1, |r, _| betas[(idx[r], j)]);
            // q = W11 * beta, maintained incrementally
            let mut q = &w11 * &beta;
            for _ in 0..INNER_MAX_ITER {
                let mut max_delta = 0.0_f64;
                for l in 0..p - 1 {
                    let old = beta[l];
                    let r = s12[l] - (q[l] - w11[(l, l)] * old);
                    let new = soft(r, lambda) / w11[(l, l)];
                    if new != old {
                        let d = new - old;
                        for m in 0..p - 1 {
                            q[m] += w11[(m, l)] * d;
                        }
                        beta[l] = new;
                        max_delta = max_delta.max(d.abs());
                    }
                }
                if max_delta <= INNER_TOL {
                    break;
                }
            }

            // write the refreshed column of W (diagonal untouched)
            let w12 = &w11 * &beta;
            for (r, &row) in idx.iter().enumerate() {
                let change = (w[(row, j)] - w12[r]).abs();
                max_change = max_change.max(change);
                w[(row, j)] = w12[r];
                w[(j, row)] = w12[r];
            }
            for (r, &row) in idx.iter().enumerate() {
                betas[(row, j)] = beta[r];
            }
        }

        if let Some(t) = trace.as_deref_mut() {
            let theta = recover_theta(s, &w, &betas)?;
            t.push(objective(s, &theta, lambda)?);
        }

        if max_change <= config.tol {
            converged = true;
            break;
        }
    }

    if !converged {
        return Err(Error::NoConvergence {
            what: "graphical lasso",
            iterations: config.max_iter,
        });
    }

    let theta = recover_theta(s, &w, &betas)?;
    if Cholesky::new(theta.clone()).is_none() {
        return Err(Error::Numerical(
            "recovered precision matrix is not positive definite".into(),
        ));
    }
    let kkt_residual = kkt(s, &w, &theta, lambda);
    Ok(PrecisionEstimate {
        theta,
        w,
        lambda,
        iterations,
        kkt_residual,
    })
}

/// Back out Θ from (W, betas): `θ_jj = 1/(w_jj - w12'β)`, `θ_12 = -β θ_jj`,
/// then symmetrize.
fn recover_theta(
    s: &DMatrix<f64>,
    w: &DMatrix<f64>,
    betas: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let p = s.nrows();
    let mut theta = DMatrix::zeros(p, p);
    for j in 0..p {
        let mut dot = 0.0;
        for row in 0..p {
            if row != j {
                dot += w[(row, j)] * betas[(row, j)];
            }
        }
        let denom = w[(j, j)] - dot;
        if !(denom > 0.0) || !denom.is_finite() {
            return Err(Error::Numerical(format!(
                "block {j}: nonpositive Schur complement {denom}"
            )));
        }
        let tjj = 1.0 / denom;
        theta[(j, j)] = tjj;
        for row in 0..p {
            if row != j {
                theta[(row, j)] = -betas[(row, j)] * tjj;
            }
        }
    }
    // mid-run asymmetry is O(tol); average it away
    for j in 0..p {
        for k in (j + 1)..p {
            let v = 0.5 * (theta[(j, k)] + theta[(k, j)]);
            theta[(j, k)] = v;
            theta[(k, j)] = v;
        }
    }
    Ok(theta)
}

fn kkt(s: &DMatrix<f64>, w: &DMatrix<f64>, theta: &DMatrix<f64>, lambda: f64) -> f64 {
    let p = s.nrows();
    let mut worst = 0.0_f64;
    for j in 0..p {
        for k in 0..p {
            if j == k {
                continue;
            }
            let grad = w[(j, k)] - s[(j, k)];
            let r = if theta[(j, k)].abs() > ZERO_TOL {
                (grad - lambda * theta[(j, k)].signum()).abs()
            } else {
                (grad.abs() - lambda).max(0.0)
            };
            worst = worst.max(r);
        }
    }
    worst
}

/// Log-spaced penalty path from `λ_max = max_{j≠k} |S_jk|` down to
/// `ratio · λ_max`. At or above `λ_max` the solution has no edges.
pub fn lambda_path(s: &DMatrix<f64>, n_points: usize, ratio: f64) -> Result<Vec<f64>> {
    if n_points < 2 {
        return Err(Error::InvalidArgument(
            "path needs at least 2 points".into(),
        ));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "path ratio must lie in (0, 1), got {ratio}"
        )));
    }
    let p = s.nrows();
    let mut lmax = 0.0_f64;
    for j in 0..p {
        for k in 0..p {
            if j != k {
                lmax = lmax.max(s[(j, k)].abs());
            }
        }
    }
    Ok((0..n_points)
        .map(|i| lmax * ratio.powf(i as f64 / (n_points - 1) as f64))
        .collect())
}

/// Extended BIC over a penalty path:
/// `EBIC(λ) = -n (log det Θ̂ - trace(Θ̂ S)) + |E| log n + 4 γ |E| log p`.
/// Ties break toward the larger (sparser) penalty. Returns the winning
/// penalty and its solve.
pub fn ebic_select(
    s: &DMatrix<f64>,
    n: usize,
    path: &[f64],
    gamma_ebic: f64,
    config: &SolverConfig,
) -> Result<(f64, PrecisionEstimate)> {
    if path.is_empty() {
        return Err(Error::InvalidArgument("empty penalty path".into()));
    }
    if n < 2 {
        return Err(Error::InvalidArgument("need n >= 2 samples".into()));
    }
    let p = s.nrows() as f64;
    let nf = n as f64;
    let mut order: Vec<f64> = path.to_vec();
    order.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let mut best: Option<(f64, f64, PrecisionEstimate)> = None;
    for &lambda in &order {
        let est = graphical_lasso(s, lambda, config)?;
        let edges = edge_set(&est, ZERO_TOL).len() as f64;
        let chol = Cholesky::new(est.theta().clone())
            .ok_or_else(|| Error::Numerical("ebic: theta lost definiteness".into()))?;
        let logdet = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let fit = logdet - (est.theta() * s).trace();
        let score = -nf * fit + edges * nf.ln() + 4.0 * gamma_ebic * edges * p.ln();
        if best.as_ref().is_none_or(|(b, _, _)| score < *b) {
            best = Some((score, lambda, est));
        }
    }
    let (_, lambda, est) = best.unwrap();
    Ok((lambda, est))
}

/// Per-λ edge-selection instabilities `D(λ)` across subsample fits:
/// mean over all pairs of `2 ξ (1-ξ)` with ξ the selection frequency.
/// `path` must be given in the order the result should follow.
fn stars_instabilities<F>(
    estimator: &F,
    n: usize,
    path: &[f64],
    subsamples: usize,
    rng: &mut impl Rng,
    config: &SolverConfig,
) -> Result<Vec<f64>>
where
    F: Fn(&[usize]) -> Result<DMatrix<f64>>,
{
    let b = (10.0 * (n as f64).sqrt()).floor() as usize;
    if b >= n {
        return Err(Error::InvalidArgument(format!(
            "subsample size b = floor(10 sqrt(n)) = {b} must be below n = {n}"
        )));
    }
    let mut counts: Vec<Vec<usize>> = Vec::new();
    let mut pairs = 0usize;
    for _ in 0..subsamples {
        let mut rows = rand::seq::index::sample(rng, n, b).into_vec();
        rows.sort_unstable();
        let s_sub = estimator(&rows)?;
        if counts.is_empty() {
            let p = s_sub.nrows();
            pairs = p * (p - 1) / 2;
            counts = vec![vec![0; pairs]; path.len()];
        }
        for (li, &lambda) in path.iter().enumerate() {
            let est = graphical_lasso(&s_sub, lambda, config)?;
            let edges = edge_set(&est, ZERO_TOL);
            let p = s_sub.nrows();
            let mut e = 0usize;
            for j in 0..p {
                for k in (j + 1)..p {
                    if edges.contains(j, k) {
                        counts[li][e] += 1;
                    }
                    e += 1;
                }
            }
        }
    }
    let m = subsamples as f64;
    Ok(counts
        .iter()
        .map(|per_pair| {
            per_pair
                .iter()
                .map(|&c| {
                    let xi = c as f64 / m;
                    2.0 * xi * (1.0 - xi)
                })
                .sum::<f64>()
                / pairs as f64
        })
        .collect())
}

/// StARS: draws `subsamples` subsamples of size `floor(10 sqrt(n))` without
/// replacement, measures edge-selection instability along the path, and
/// picks the densest penalty whose monotonized instability stays at or
/// below `beta`. The final fit is solved on the full-data matrix, i.e. the
/// estimator applied to all rows. If no penalty qualifies, the sparsest one
/// is returned.
pub fn stars_select<F>(
    estimator: F,
    n: usize,
    path: &[f64],
    subsamples: usize,
    beta: f64,
    rng: &mut impl Rng,
    config: &SolverConfig,
) -> Result<(f64, PrecisionEstimate)>
where
    F: Fn(&[usize]) -> Result<DMatrix<f64>>,
{
    if path.is_empty() {
        return Err(Error::InvalidArgument("empty penalty path".into()));
    }
    if subsamples < 2 {
        return Err(Error::InvalidArgument(
            "stability selection needs at least 2 subsamples".into(),
        ));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidArgument(format!(
            "instability budget must lie in [0, 1], got {beta}"
        )));
    }
    let mut order: Vec<f64> = path.to_vec();
    order.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let instab = stars_instabilities(&estimator, n, &order, subsamples, rng, config)?;
    // monotonize from the sparse end and keep the densest qualifying λ
    let mut selected = order[0];
    let mut running = 0.0_f64;
    for (i, &d) in instab.iter().enumerate() {
        running = running.max(d);
        if running <= beta {
            selected = order[i];
        } else {
            break;
        }
    }

    let all_rows: Vec<usize> = (0..n).collect();
    let s_full = estimator(&all_rows)?;
    let est = graphical_lasso(&s_full, selected, config)?;
    Ok((selected, est))
}
