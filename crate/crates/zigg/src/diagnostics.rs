//! Evaluation metrics for structure recovery, the naive comparator, and the
//! computable theoretical constants of the recovery guarantee.
//!
//! Everything here consumes a ground truth, so these functions belong to
//! the simulation side of the project: none of them is available (or used)
//! at estimation time.

use nalgebra::DMatrix;
use std::collections::BTreeMap;
use std::fmt;

use crate::glasso::EdgeSet;
use crate::pairlik::{CovarianceEstimate, ZeroInflatedMatrix};
use crate::simgen::GroundTruth;
use crate::{Error, Result};

/// Which estimator produced a detection report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Two-step procedure: pairwise truncated likelihood, then glasso.
    Ours,
    /// Glasso on the correlation of the zero-inflated data as-is.
    Baseline,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Ours => "ours",
            Method::Baseline => "baseline",
        })
    }
}

/// Classification of a variable pair against the truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairLabel {
    /// The pair is an edge of the true graph.
    TrueEdge,
    /// Not an edge, but the indices are two apart — the characteristic
    /// false positive of chain graphs. Only assigned when asked for.
    SkipOne,
    /// Any other non-edge.
    OtherFalse,
}

impl fmt::Display for PairLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairLabel::TrueEdge => "true-edge",
            PairLabel::SkipOne => "skip-one",
            PairLabel::OtherFalse => "other-false",
        })
    }
}

/// Per-pair selection frequencies over repeated runs, with truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    rates: BTreeMap<(usize, usize), f64>,
    labels: BTreeMap<(usize, usize), PairLabel>,
    repetitions: usize,
    method: Method,
    p: usize,
}

impl DetectionReport {
    /// Selection frequency of every unordered pair (j, k), j < k.
    pub fn rates(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.rates
    }

    pub fn labels(&self) -> &BTreeMap<(usize, usize), PairLabel> {
        &self.labels
    }

    pub fn repetitions(&self) -> usize {
        self.repetitions
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn rate(&self, j: usize, k: usize) -> f64 {
        let key = if j < k { (j, k) } else { (k, j) };
        self.rates[&key]
    }

    pub fn label(&self, j: usize, k: usize) -> PairLabel {
        let key = if j < k { (j, k) } else { (k, j) };
        self.labels[&key]
    }

    /// Mean selection frequency over the pairs carrying a given label, or
    /// `None` when no pair carries it.
    pub fn mean_rate(&self, label: PairLabel) -> Option<f64> {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (pair, &l) in &self.labels {
            if l == label {
                sum += self.rates[pair];
                count += 1;
            }
        }
        (count > 0).then(|| sum / count as f64)
    }
}

/// Tallies how often each pair was selected across repetitions and labels
/// every pair against the truth. With `chain_labels`, non-edges whose
/// indices differ by exactly 2 get the skip-one class.
pub fn detection_rates(
    edge_sets: &[EdgeSet],
    truth: &GroundTruth,
    chain_labels: bool,
    method: Method,
) -> Result<DetectionReport> {
    if edge_sets.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least one repetition to tally".into(),
        ));
    }
    let p = truth.p();
    let reps = edge_sets.len();
    let mut rates = BTreeMap::new();
    let mut labels = BTreeMap::new();
    for j in 0..p {
        for k in (j + 1)..p {
            let count = edge_sets.iter().filter(|e| e.contains(j, k)).count();
            rates.insert((j, k), count as f64 / reps as f64);
            let label = if truth.edges().contains(j, k) {
                PairLabel::TrueEdge
            } else if chain_labels && k - j == 2 {
                PairLabel::SkipOne
            } else {
                PairLabel::OtherFalse
            };
            labels.insert((j, k), label);
        }
    }
    Ok(DetectionReport {
        rates,
        labels,
        repetitions: reps,
        method,
        p,
    })
}

/// The comparator input: sample correlation of the zero-inflated data with
/// the zeros kept in, i.e. pretending no censoring happened.
pub fn baseline_covariance(data: &ZeroInflatedMatrix) -> Result<CovarianceEstimate> {
    let y = data.values();
    let (n, p) = y.shape();
    let nf = n as f64;
    let means: Vec<f64> = (0..p).map(|j| y.column(j).sum() / nf).collect();
    let mut cov = DMatrix::zeros(p, p);
    for j in 0..p {
        for k in j..p {
            let mut acc = 0.0;
            for i in 0..n {
                acc += (y[(i, j)] - means[j]) * (y[(i, k)] - means[k]);
            }
            let v = acc / (nf - 1.0);
            cov[(j, k)] = v;
            cov[(k, j)] = v;
        }
    }
    for j in 0..p {
        if !(cov[(j, j)] > 0.0) {
            return Err(Error::Numerical(format!(
                "column {} has zero variance (fully censored?)",
                j + 1
            )));
        }
    }
    let d: Vec<f64> = (0..p).map(|j| cov[(j, j)].sqrt()).collect();
    let mut corr = DMatrix::from_fn(p, p, |j, k| cov[(j, k)] / (d[j] * d[k]));
    for j in 0..p {
        corr[(j, j)] = 1.0;
        for k in (j + 1)..p {
            let v = 0.5 * (corr[(j, k)] + corr[(k, j)]);
            // a perfectly collinear pair would give |r| = 1; keep it legal
            let v = v.clamp(-1.0, 1.0);
            corr[(j, k)] = v;
            corr[(k, j)] = v;
        }
    }
    CovarianceEstimate::new(corr, 0.0)
}

/// Computable constants of the recovery guarantee for a simulated truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryConstants {
    /// Maximum vertex degree of the true graph.
    pub d: usize,
    /// Max row l1 norm of Σ*.
    pub kappa_sigma: f64,
    /// Infinity-operator norm of (Γ*_SS)^{-1}.
    pub kappa_gamma: f64,
}

/// Guard: the S^c sweep is quadratic in p² and pointless for large graphs.
const MAX_P_FOR_GAMMA: usize = 60;

/// Ordered-pair support of the truth: indices j·p + k with j = k or
/// (j, k) an edge, ascending.
fn support_pairs(truth: &GroundTruth) -> Vec<(usize, usize)> {
    let p = truth.p();
    let mut s = Vec::new();
    for j in 0..p {
        for k in 0..p {
            if j == k || truth.edges().contains(j, k) {
                s.push((j, k));
            }
        }
    }
    s
}

/// Inverse of the support block of Γ* = Σ* ⊗ Σ*, where
/// `Γ*[(j,k),(l,m)] = Σ*[j,l] · Σ*[k,m]` over ordered pairs.
fn gamma_ss_inverse(truth: &GroundTruth) -> Result<(Vec<(usize, usize)>, DMatrix<f64>)> {
    let p = truth.p();
    if p > MAX_P_FOR_GAMMA {
        return Err(Error::InvalidArgument(format!(
            "support-block solve guarded to p <= {MAX_P_FOR_GAMMA}, got {p}"
        )));
    }
    let sigma = truth.sigma_star();
    let s_idx = support_pairs(truth);
    let m = s_idx.len();
    let gss = DMatrix::from_fn(m, m, |a, b| {
        let (j, k) = s_idx[a];
        let (l, mm) = s_idx[b];
        sigma[(j, l)] * sigma[(k, mm)]
    });
    let inv = gss
        .try_inverse()
        .ok_or_else(|| Error::Numerical("support block of the Kronecker matrix is singular".into()))?;
    Ok((s_idx, inv))
}

/// The incoherence margin `α = 1 − max_{e ∈ S^c} ‖Γ*_{eS} (Γ*_{SS})^{-1}‖_1`.
/// Values at or below zero mean the incoherence assumption fails for this
/// truth; that is a property of the model, not an error. An empty S^c
/// (saturated graph) gives 1 by convention.
pub fn incoherence_alpha(truth: &GroundTruth) -> Result<f64> {
    let (s_idx, inv) = gamma_ss_inverse(truth)?;
    let p = truth.p();
    let sigma = truth.sigma_star();
    let m = s_idx.len();
    let in_s = {
        let mut mask = vec![false; p * p];
        for &(j, k) in &s_idx {
            mask[j * p + k] = true;
        }
        mask
    };
    let mut worst = 0.0_f64;
    let mut row = vec![0.0_f64; m];
    for j in 0..p {
        for k in 0..p {
            if in_s[j * p + k] {
                continue;
            }
            for (b, &(l, mm)) in s_idx.iter().enumerate() {
                row[b] = sigma[(j, l)] * sigma[(k, mm)];
            }
            let mut l1 = 0.0;
            for b in 0..m {
                let mut acc = 0.0;
                for a in 0..m {
                    acc += row[a] * inv[(a, b)];
                }
                l1 += acc.abs();
            }
            worst = worst.max(l1);
        }
    }
    Ok(1.0 - worst)
}

/// d, κ_Σ*, and κ_Γ* for a simulated truth.
pub fn theory_constants(truth: &GroundTruth) -> Result<TheoryConstants> {
    let p = truth.p();
    let sigma = truth.sigma_star();
    let kappa_sigma = (0..p)
        .map(|j| (0..p).map(|k| sigma[(j, k)].abs()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    let (_, inv) = gamma_ss_inverse(truth)?;
    let m = inv.nrows();
    let kappa_gamma = (0..m)
        .map(|a| (0..m).map(|b| inv[(a, b)].abs()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    Ok(TheoryConstants {
        d: truth.max_degree(),
        kappa_sigma,
        kappa_gamma,
    })
}
