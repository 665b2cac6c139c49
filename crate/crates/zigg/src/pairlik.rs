//! Step 1: pairwise maximum-likelihood covariance estimation.
//!
//! Each off-diagonal entry of the latent correlation matrix is estimated on
//! its own by maximizing the exact likelihood of the observed pair
//! `(Y_j, Y_k)` over the correlation. A pair's n-sample reduces to four
//! buckets keyed by the censoring pattern ([`PairBuckets`]); the fully
//! observed bucket further collapses to three sums of squares/products, so
//! one likelihood evaluation costs O(n01 + n10) kernel calls plus two
//! quadratures, independent of n11.
//!
//! The per-pair maximizer is found by a coarse grid followed by Brent
//! refinement inside the best grid cells. The assembled matrix has unit
//! diagonal but need not be positive semidefinite; [`psd_repair`] projects
//! it to a well-conditioned correlation matrix for the downstream solver.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::brent::brent_minimize;
use crate::truncdist::{
    check_sigma, ln_phi01, ln_phi10, phi00, PairBounds, TruncationScheme,
};
use crate::{Error, Result};

/// Observed n×p sample of the zero-inflated vector Y. A literal zero is the
/// censoring mark: under the continuous model an exact zero carries no mass,
/// so the collision with a genuine zero observation is a measure-zero
/// convention, not a restriction.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroInflatedMatrix {
    values: DMatrix<f64>,
}

impl ZeroInflatedMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() < 2 || values.ncols() < 2 {
            return Err(Error::InvalidArgument(format!(
                "zero-inflated sample needs n >= 2 and p >= 2, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "zero-inflated sample contains non-finite entries".into(),
            ));
        }
        Ok(Self { values })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// Checks that every nonzero entry lies inside its variable's window.
    /// The error message uses 1-based row/column indices.
    pub fn validate_against(&self, scheme: &TruncationScheme) -> Result<()> {
        if scheme.p() != self.p() {
            return Err(Error::DimensionMismatch(format!(
                "data has {} columns but scheme has {} variables",
                self.p(),
                scheme.p()
            )));
        }
        for j in 0..self.p() {
            let (a, b) = (scheme.lower()[j], scheme.upper()[j]);
            for i in 0..self.n() {
                let y = self.values[(i, j)];
                if y != 0.0 && !(a..=b).contains(&y) {
                    return Err(Error::InvalidArgument(format!(
                        "value {y} at row {}, column {} outside window [{a}, {b}]",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(())
    }

    /// Row subsample (for stability selection). Indices must be in range and
    /// there must be at least two of them.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InvalidArgument(
                "subsample needs at least 2 rows".into(),
            ));
        }
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n()) {
            return Err(Error::InvalidArgument(format!(
                "row index {bad} out of range for n = {}",
                self.n()
            )));
        }
        let m = DMatrix::from_fn(rows.len(), self.p(), |i, j| self.values[(rows[i], j)]);
        Ok(Self { values: m })
    }
}

/// Sufficient decomposition of one pair's sample by censoring pattern.
///
/// Bucket 11 (both observed) is kept as the three sums `s_jj`, `s_kk`,
/// `s_jk`; buckets 01/10 keep the observed coordinate. Bucket contents are
/// sorted, so the decomposition — and everything downstream — is invariant
/// to row permutations of the data, bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct PairBuckets {
    pub n00: usize,
    pub n01: usize,
    pub n10: usize,
    pub n11: usize,
    pub s_jj: f64,
    pub s_kk: f64,
    pub s_jk: f64,
    pub obs01: Vec<f64>,
    pub obs10: Vec<f64>,
}

impl PairBuckets {
    pub fn total(&self) -> usize {
        self.n00 + self.n01 + self.n10 + self.n11
    }

    /// True when no bucket carries information about the correlation other
    /// than through the all-censored probability.
    pub fn is_degenerate(&self) -> bool {
        self.n01 + self.n10 + self.n11 == 0
    }
}

/// Splits the rows of `data` by the zero pattern of columns (j, k).
pub fn bucketize(data: &ZeroInflatedMatrix, j: usize, k: usize) -> Result<PairBuckets> {
    let p = data.p();
    if j == k || j >= p || k >= p {
        return Err(Error::InvalidArgument(format!(
            "invalid pair ({j}, {k}) for p = {p}"
        )));
    }
    let mut n00 = 0;
    let mut obs01 = Vec::new();
    let mut obs10 = Vec::new();
    let mut obs11 = Vec::new();
    for i in 0..data.n() {
        let yj = data.values()[(i, j)];
        let yk = data.values()[(i, k)];
        match (yj != 0.0, yk != 0.0) {
            (false, false) => n00 += 1,
            (false, true) => obs01.push(yk),
            (true, false) => obs10.push(yj),
            (true, true) => obs11.push((yj, yk)),
        }
    }
    obs01.sort_by(|a, b| a.partial_cmp(b).unwrap());
    obs10.sort_by(|a, b| a.partial_cmp(b).unwrap());
    obs11.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut s_jj = 0.0;
    let mut s_kk = 0.0;
    let mut s_jk = 0.0;
    for &(yj, yk) in &obs11 {
        s_jj += yj * yj;
        s_kk += yk * yk;
        s_jk += yj * yk;
    }
    Ok(PairBuckets {
        n00,
        n01: obs01.len(),
        n10: obs10.len(),
        n11: obs11.len(),
        s_jj,
        s_kk,
        s_jk,
        obs01,
        obs10,
    })
}

/// Log-likelihood of one pair's sample at correlation `sigma`.
///
/// The fully observed bucket enters in closed form through its sums:
/// `-n11*log(2π) - (n11/2)*log(1-σ²) - (s_jj - 2σ s_jk + s_kk)/(2(1-σ²))`.
pub fn pair_loglik(sigma: f64, buckets: &PairBuckets, bounds: &PairBounds) -> Result<f64> {
    check_sigma(sigma)?;
    let mut ll = 0.0;
    if buckets.n00 > 0 {
        ll += buckets.n00 as f64 * phi00(sigma, bounds)?.ln();
    }
    for &yk in &buckets.obs01 {
        ll += ln_phi01(sigma, yk, bounds);
    }
    for &yj in &buckets.obs10 {
        ll += ln_phi10(sigma, yj, bounds);
    }
    if buckets.n11 > 0 {
        let n11 = buckets.n11 as f64;
        let v = 1.0 - sigma * sigma;
        ll += -n11 * (2.0 * std::f64::consts::PI).ln()
            - 0.5 * n11 * v.ln()
            - (buckets.s_jj - 2.0 * sigma * buckets.s_jk + buckets.s_kk) / (2.0 * v);
    } else if buckets.total() == 0 {
        return Err(Error::InvalidArgument("empty pair sample".into()));
    }
    if !ll.is_finite() {
        return Err(Error::Numerical(format!(
            "pair log-likelihood not finite at sigma = {sigma}"
        )));
    }
    Ok(ll)
}

/// Knobs of the Step-1 estimator. `Default` carries the shipped values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    /// Margin of the search interval [-1+delta, 1-delta].
    pub delta: f64,
    /// Number of coarse grid points scanned before refinement.
    pub grid_points: usize,
    /// Absolute x-tolerance of the Brent refinement.
    pub tol_sigma: f64,
    /// Eigenvalue floor used by [`psd_repair`].
    pub eps_psd: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            delta: 1e-3,
            grid_points: 41,
            tol_sigma: 1e-6,
            eps_psd: 1e-3,
        }
    }
}

impl EstimatorConfig {
    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) || self.delta < crate::truncdist::DELTA_MIN {
            return Err(Error::InvalidArgument(format!(
                "delta must lie in [{}, 1), got {}",
                crate::truncdist::DELTA_MIN,
                self.delta
            )));
        }
        if self.grid_points < 3 {
            return Err(Error::InvalidArgument(
                "grid needs at least 3 points".into(),
            ));
        }
        if !(self.tol_sigma > 0.0) || !(self.eps_psd > 0.0) {
            return Err(Error::InvalidArgument(
                "tolerances must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Why a pair's estimate deserves a second look.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairFlag {
    /// Every observation of the pair was fully censored; the estimate is the
    /// neutral 0 by convention.
    DegenerateData,
    /// Two separated maximizers tied in likelihood; the one with smaller
    /// absolute value was returned.
    TieBroken,
}

/// Result of one pair's likelihood maximization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaEstimate {
    pub sigma: f64,
    pub flag: Option<PairFlag>,
}

/// A flagged pair inside a full covariance estimation, 0-based indices j < k.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlaggedPair {
    pub j: usize,
    pub k: usize,
    pub flag: PairFlag,
}

/// Maximizes [`pair_loglik`] over `[-1+delta, 1-delta]`: coarse grid, then
/// Brent refinement around every surviving grid maximum. Deterministic for
/// fixed inputs. Ties between separated maximizers break toward the smaller
/// `|sigma|` and are flagged.
pub fn estimate_pair_sigma(
    buckets: &PairBuckets,
    bounds: &PairBounds,
    config: &EstimatorConfig,
) -> Result<SigmaEstimate> {
    config.validate()?;
    if buckets.total() == 0 {
        return Err(Error::InvalidArgument("empty pair sample".into()));
    }
    if buckets.is_degenerate() {
        return Ok(SigmaEstimate {
            sigma: 0.0,
            flag: Some(PairFlag::DegenerateData),
        });
    }

    let lim = 1.0 - config.delta;
    let g = config.grid_points;
    let step = 2.0 * lim / (g - 1) as f64;
    let grid: Vec<f64> = (0..g).map(|i| -lim + step * i as f64).collect();
    // A -inf value is a legitimately impossible corner of the domain (the
    // data contradicts that sigma beyond double precision), not an error.
    let eval = |s: f64| pair_loglik(s, buckets, bounds).unwrap_or(f64::NEG_INFINITY);
    let values: Vec<f64> = grid.iter().map(|&s| eval(s)).collect();
    if values.iter().all(|v| *v == f64::NEG_INFINITY) {
        return Err(Error::Numerical(
            "pair log-likelihood vanished on the whole grid".into(),
        ));
    }

    // local maxima of the grid scan (boundaries count)
    let mut starts = Vec::new();
    for i in 0..g {
        let left_ok = i == 0 || values[i] > values[i - 1];
        let right_ok = i == g - 1 || values[i] >= values[i + 1];
        if left_ok && right_ok {
            starts.push(i);
        }
    }

    // refine each basin
    let mut candidates: Vec<(f64, f64)> = Vec::with_capacity(starts.len());
    for &i in &starts {
        let lo = if i == 0 { -lim } else { grid[i - 1] };
        let hi = if i == g - 1 { lim } else { grid[i + 1] };
        let (x, neg) = brent_minimize(|s| -eval(s), lo, hi, config.tol_sigma, 200);
        candidates.push((x, -neg));
    }

    // collapse candidates that converged to the same point
    candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    candidates.dedup_by(|a, b| (a.0 - b.0).abs() <= 10.0 * config.tol_sigma);

    let best_value = candidates
        .iter()
        .map(|&(_, v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let tie_tol = 1e-9 * (1.0 + best_value.abs());
    let mut tied: Vec<f64> = candidates
        .iter()
        .filter(|&&(_, v)| v >= best_value - tie_tol)
        .map(|&(x, _)| x)
        .collect();
    tied.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap());
    let sigma = tied[0];
    let flag = if tied.len() > 1 {
        Some(PairFlag::TieBroken)
    } else {
        None
    };
    Ok(SigmaEstimate { sigma, flag })
}

/// Step-1 output: a symmetric matrix with exact unit diagonal whose
/// off-diagonals live in `[-1+delta, 1-delta]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    matrix: DMatrix<f64>,
    delta: f64,
}

impl CovarianceEstimate {
    pub fn new(matrix: DMatrix<f64>, delta: f64) -> Result<Self> {
        let p = matrix.nrows();
        if matrix.ncols() != p || p < 1 {
            return Err(Error::DimensionMismatch(format!(
                "covariance estimate must be square, got {}x{}",
                p,
                matrix.ncols()
            )));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::InvalidArgument(format!(
                "delta must lie in [0, 1), got {delta}"
            )));
        }
        let limit = 1.0 - delta + 1e-12;
        for j in 0..p {
            if (matrix[(j, j)] - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "diagonal entry ({j}, {j}) = {} is not 1",
                    matrix[(j, j)]
                )));
            }
            for k in (j + 1)..p {
                if matrix[(j, k)] != matrix[(k, j)] {
                    return Err(Error::InvalidArgument(format!(
                        "asymmetry at ({j}, {k})"
                    )));
                }
                if !matrix[(j, k)].is_finite() || matrix[(j, k)].abs() > limit {
                    return Err(Error::InvalidArgument(format!(
                        "off-diagonal ({j}, {k}) = {} outside [-{}, {}]",
                        matrix[(j, k)],
                        1.0 - delta,
                        1.0 - delta
                    )));
                }
            }
        }
        Ok(Self { matrix, delta })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn p(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Runs [`estimate_pair_sigma`] over every pair (j < k) of the sample and
/// assembles the symmetric matrix. Pairs are independent; they are evaluated
/// in parallel and written back by index, so the result does not depend on
/// the worker count.
pub fn estimate_covariance(
    data: &ZeroInflatedMatrix,
    scheme: &TruncationScheme,
    config: &EstimatorConfig,
) -> Result<(CovarianceEstimate, Vec<FlaggedPair>)> {
    config.validate()?;
    data.validate_against(scheme)?;
    let p = data.p();

    let pairs: Vec<(usize, usize)> = (0..p)
        .flat_map(|j| ((j + 1)..p).map(move |k| (j, k)))
        .collect();
    let results: Vec<(usize, usize, SigmaEstimate)> = pairs
        .par_iter()
        .map(|&(j, k)| {
            let buckets = bucketize(data, j, k)?;
            let bounds = scheme.pair_bounds(j, k)?;
            let est = estimate_pair_sigma(&buckets, &bounds, config)?;
            Ok((j, k, est))
        })
        .collect::<Result<_>>()?;

    let mut m = DMatrix::identity(p, p);
    let mut flags = Vec::new();
    for (j, k, est) in results {
        m[(j, k)] = est.sigma;
        m[(k, j)] = est.sigma;
        if let Some(flag) = est.flag {
            flags.push(FlaggedPair { j, k, flag });
        }
    }
    Ok((CovarianceEstimate::new(m, config.delta)?, flags))
}

/// Projects a symmetric unit-diagonal matrix onto the well-conditioned
/// correlation matrices: eigenvalues are clipped to at least `eps`, the
/// result is rescaled back to unit diagonal, and the two steps repeat until
/// the floor holds after rescaling (one or two rounds in practice). Inputs
/// already meeting the floor are returned unchanged.
pub fn psd_repair(estimate: &CovarianceEstimate, eps: f64) -> Result<CovarianceEstimate> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "eigenvalue floor must lie in (0, 1), got {eps}"
        )));
    }
    let p = estimate.p();
    let delta = estimate.delta();
    let off_limit = 1.0 - delta;
    let mut m = estimate.matrix().clone();

    for _round in 0..50 {
        let eig = nalgebra::SymmetricEigen::new(m.clone());
        let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig >= eps * (1.0 - 1e-9) {
            let repaired = if _round == 0 {
                estimate.matrix().clone()
            } else {
                m
            };
            return CovarianceEstimate::new(repaired, delta);
        }
        let clipped = eig.eigenvalues.map(|l| l.max(eps));
        let q = eig.eigenvectors;
        let mut rebuilt = &q * DMatrix::from_diagonal(&clipped) * q.transpose();
        // rescale to unit diagonal, clamp stray off-diagonals, resymmetrize
        let scale: Vec<f64> = (0..p).map(|j| rebuilt[(j, j)].sqrt()).collect();
        for j in 0..p {
            for k in 0..p {
                rebuilt[(j, k)] /= scale[j] * scale[k];
            }
        }
        for j in 0..p {
            rebuilt[(j, j)] = 1.0;
            for k in (j + 1)..p {
                let sym = 0.5 * (rebuilt[(j, k)] + rebuilt[(k, j)]);
                let clamped = sym.clamp(-off_limit, off_limit);
                rebuilt[(j, k)] = clamped;
                rebuilt[(k, j)] = clamped;
            }
        }
        m = rebuilt;
    }
    Err(Error::NoConvergence {
        what: "psd repair",
        iterations: 50,
    })
}
