//! Simulation harness: ground-truth graphical models, latent Gaussian
//! sampling, and the zero-inflating truncation that produces observations.
//!
//! A ground truth starts from a 0/1 adjacency `A` (chain, Erdős–Rényi, or
//! hub groups). The raw precision is `c I + strength · A` with `c` chosen so
//! the smallest eigenvalue is exactly 0.1, its inverse is rescaled to unit
//! diagonal, and the final precision is recomputed so that the support of
//! `Θ*` equals `A` exactly.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::glasso::EdgeSet;
use crate::pairlik::ZeroInflatedMatrix;
use crate::truncdist::TruncationScheme;
use crate::{Error, Result};

/// Graph topologies for simulated truths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Structure {
    /// Edges (j, j+1) for all consecutive indices.
    Chain,
    /// Every pair independently an edge with the given probability.
    Random { edge_prob: f64 },
    /// Indices split into contiguous groups of near-equal size; the first
    /// index of each group connects to every other member of the group.
    Hub { groups: usize },
}

/// Recipe for one ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpec {
    pub structure: Structure,
    pub p: usize,
    /// Off-diagonal weight placed on each edge of the raw precision.
    pub strength: f64,
    /// Seed of the adjacency draw (only `Random` consumes randomness, but
    /// the seed participates in every truth's identity).
    pub seed: u64,
}

/// A simulated truth: precision, covariance, and its graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    theta_star: DMatrix<f64>,
    sigma_star: DMatrix<f64>,
    edges: EdgeSet,
    max_degree: usize,
}

impl GroundTruth {
    /// True precision matrix; its support is exactly the edge set plus the
    /// diagonal.
    pub fn theta_star(&self) -> &DMatrix<f64> {
        &self.theta_star
    }

    /// True covariance matrix with unit diagonal.
    pub fn sigma_star(&self) -> &DMatrix<f64> {
        &self.sigma_star
    }

    pub fn edges(&self) -> &EdgeSet {
        &self.edges
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn p(&self) -> usize {
        self.theta_star.nrows()
    }

    /// Assembles a truth from explicitly supplied matrices, e.g. a model
    /// taken from the literature or a relabeled copy of a generated one.
    ///
    /// The pair must honor the model contract: both matrices symmetric,
    /// `sigma_star` with unit diagonal, `theta_star` positive definite, and
    /// the two inverse to each other. The edge set is read off the
    /// off-diagonal support of `theta_star` (entries larger than 1e-12 in
    /// absolute value).
    pub fn new(theta_star: DMatrix<f64>, sigma_star: DMatrix<f64>) -> Result<Self> {
        let p = theta_star.nrows();
        if !theta_star.is_square() || !sigma_star.is_square() || sigma_star.nrows() != p || p == 0 {
            return Err(Error::DimensionMismatch(format!(
                "need two square matrices of equal size, got {}x{} and {}x{}",
                theta_star.nrows(),
                theta_star.ncols(),
                sigma_star.nrows(),
                sigma_star.ncols()
            )));
        }
        for (name, m) in [("theta_star", &theta_star), ("sigma_star", &sigma_star)] {
            for j in 0..p {
                for k in (j + 1)..p {
                    if (m[(j, k)] - m[(k, j)]).abs() > 1e-10 {
                        return Err(Error::InvalidArgument(format!(
                            "{name} asymmetric at ({j}, {k})"
                        )));
                    }
                }
            }
        }
        for j in 0..p {
            if (sigma_star[(j, j)] - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "sigma_star diagonal entry {j} is {}, expected 1",
                    sigma_star[(j, j)]
                )));
            }
        }
        if theta_star.clone().cholesky().is_none() {
            return Err(Error::InvalidArgument(
                "theta_star is not positive definite".into(),
            ));
        }
        let product = &theta_star * &sigma_star;
        let defect = (0..p)
            .flat_map(|j| (0..p).map(move |k| (j, k)))
            .map(|(j, k)| (product[(j, k)] - if j == k { 1.0 } else { 0.0 }).abs())
            .fold(0.0f64, f64::max);
        if defect > 1e-8 {
            return Err(Error::InvalidArgument(format!(
                "theta_star * sigma_star deviates from identity by {defect:e}"
            )));
        }
        let edges: EdgeSet = (0..p)
            .flat_map(|j| ((j + 1)..p).map(move |k| (j, k)))
            .filter(|&(j, k)| theta_star[(j, k)].abs() > 1e-12)
            .collect();
        let max_degree = edges.max_degree(p);
        Ok(Self {
            theta_star,
            sigma_star,
            edges,
            max_degree,
        })
    }
}

fn adjacency(spec: &GraphSpec) -> Result<DMatrix<f64>> {
    let p = spec.p;
    if p < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 variables, got {p}"
        )));
    }
    let mut a = DMatrix::zeros(p, p);
    let mut link = |j: usize, k: usize| {
        a[(j, k)] = 1.0;
        a[(k, j)] = 1.0;
    };
    match spec.structure {
        Structure::Chain => {
            for j in 0..p - 1 {
                link(j, j + 1);
            }
        }
        Structure::Random { edge_prob } => {
            if !(0.0..=1.0).contains(&edge_prob) {
                return Err(Error::InvalidArgument(format!(
                    "edge probability must lie in [0, 1], got {edge_prob}"
                )));
            }
            let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
            for j in 0..p {
                for k in (j + 1)..p {
                    if rng.gen::<f64>() < edge_prob {
                        link(j, k);
                    }
                }
            }
        }
        Structure::Hub { groups } => {
            if groups == 0 || groups > p / 2 {
                return Err(Error::InvalidArgument(format!(
                    "hub groups must satisfy 1 <= groups <= p/2, got {groups} for p = {p}"
                )));
            }
            // contiguous blocks, sizes differing by at most one
            let base = p / groups;
            let extra = p % groups;
            let mut start = 0;
            for g in 0..groups {
                let size = base + usize::from(g < extra);
                for m in start + 1..start + size {
                    link(start, m);
                }
                start += size;
            }
        }
    }
    Ok(a)
}

/// Builds the truth for a graph recipe. The raw precision `c I + s A` gets
/// `c = 0.1 - λ_min(s A)` so its smallest eigenvalue is exactly 0.1; the
/// covariance is its inverse rescaled to unit diagonal.
pub fn make_ground_truth(spec: &GraphSpec) -> Result<GroundTruth> {
    if !spec.strength.is_finite() || spec.strength == 0.0 {
        return Err(Error::InvalidArgument(format!(
            "edge strength must be finite and nonzero, got {}",
            spec.strength
        )));
    }
    let p = spec.p;
    let a = adjacency(spec)?;
    let sa = &a * spec.strength;
    let eig = SymmetricEigen::new(sa.clone());
    let lambda_min = eig.eigenvalues.min();
    let c = 0.1 - lambda_min;

    let mut theta_raw = sa;
    for j in 0..p {
        theta_raw[(j, j)] = c;
    }
    let sigma_raw = theta_raw.clone().try_inverse().ok_or_else(|| {
        Error::Numerical("raw precision unexpectedly singular".into())
    })?;

    // rescale to a correlation matrix; the matching precision is the
    // congruent transform D^{1/2} Θ_raw D^{1/2}, which keeps the support of
    // A exactly (no inversion round-off on structural zeros)
    let d: Vec<f64> = (0..p).map(|j| sigma_raw[(j, j)].sqrt()).collect();
    let mut sigma_star = DMatrix::from_fn(p, p, |j, k| sigma_raw[(j, k)] / (d[j] * d[k]));
    let mut theta_star = DMatrix::from_fn(p, p, |j, k| theta_raw[(j, k)] * d[j] * d[k]);
    for j in 0..p {
        sigma_star[(j, j)] = 1.0;
        for k in (j + 1)..p {
            let sv = 0.5 * (sigma_star[(j, k)] + sigma_star[(k, j)]);
            sigma_star[(j, k)] = sv;
            sigma_star[(k, j)] = sv;
            let tv = 0.5 * (theta_star[(j, k)] + theta_star[(k, j)]);
            theta_star[(j, k)] = tv;
            theta_star[(k, j)] = tv;
        }
    }

    let edges = crate::glasso::edges_of(&a, 0.5);
    let max_degree = edges.max_degree(p);
    Ok(GroundTruth {
        theta_star,
        sigma_star,
        edges,
        max_degree,
    })
}

/// Draws `n` rows of the latent Gaussian `N(0, Σ*)` by Cholesky coloring.
/// Draw order is row-major, so output is a pure function of the rng state.
pub fn sample_latent(truth: &GroundTruth, n: usize, rng: &mut impl Rng) -> Result<DMatrix<f64>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 samples, got {n}"
        )));
    }
    let p = truth.p();
    let chol = Cholesky::new(truth.sigma_star().clone())
        .ok_or_else(|| Error::Numerical("covariance lost positive definiteness".into()))?;
    let l = chol.l();
    let mut out = DMatrix::zeros(n, p);
    let mut z = DVector::zeros(p);
    for i in 0..n {
        for j in 0..p {
            z[j] = rng.sample(StandardNormal);
        }
        let x = &l * &z;
        for j in 0..p {
            out[(i, j)] = x[j];
        }
    }
    Ok(out)
}

/// Applies the observation mechanism `y = x · 1[a_j <= x <= b_j]` per
/// column: values outside their window are zeroed (the censoring marker).
/// Idempotent, because zero maps to zero under every window.
pub fn truncate(latent: &DMatrix<f64>, scheme: &TruncationScheme) -> Result<ZeroInflatedMatrix> {
    let (n, p) = latent.shape();
    if p != scheme.p() {
        return Err(Error::DimensionMismatch(format!(
            "data has {p} columns but the scheme covers {}",
            scheme.p()
        )));
    }
    let mut y = DMatrix::zeros(n, p);
    for j in 0..p {
        let (a, b) = (scheme.lower()[j], scheme.upper()[j]);
        for i in 0..n {
            let x = latent[(i, j)];
            y[(i, j)] = if (a..=b).contains(&x) { x } else { 0.0 };
        }
    }
    ZeroInflatedMatrix::new(y)
}

/// Window layouts for building truncation schemes.
#[derive(Debug, Clone, PartialEq)]
pub enum SchemeKind {
    /// The same window on every coordinate.
    Identical { lower: f64, upper: f64 },
    /// `a_j = -1` throughout while `b_j` falls linearly from 2.0 to 0.5,
    /// so later coordinates lose more and more of the upper tail.
    Decreasing,
    /// Explicit per-coordinate windows; the list length must equal `p`.
    Custom(Vec<(f64, f64)>),
}

/// Materializes a window layout for `p` coordinates.
pub fn make_scheme(kind: &SchemeKind, p: usize) -> Result<TruncationScheme> {
    let (lower, upper): (Vec<f64>, Vec<f64>) = match kind {
        SchemeKind::Identical { lower, upper } => {
            (vec![*lower; p], vec![*upper; p])
        }
        SchemeKind::Decreasing => {
            if p < 2 {
                return Err(Error::InvalidArgument(
                    "decreasing layout needs p >= 2".into(),
                ));
            }
            let upper = (0..p)
                .map(|j| 2.0 - 1.5 * j as f64 / (p - 1) as f64)
                .collect();
            (vec![-1.0; p], upper)
        }
        SchemeKind::Custom(windows) => {
            if windows.len() != p {
                return Err(Error::DimensionMismatch(format!(
                    "custom layout lists {} windows for p = {p}",
                    windows.len()
                )));
            }
            windows.iter().copied().unzip()
        }
    };
    TruncationScheme::new(lower, upper)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain_spec(p: usize) -> GraphSpec {
        GraphSpec {
            structure: Structure::Chain,
            p,
            strength: 0.3,
            seed: 7,
        }
    }

    #[test]
    fn chain_p5_matches_closed_form() {
        let truth = make_ground_truth(&chain_spec(5)).unwrap();
        // c = 0.1 - 0.3 λ_min(A_chain5), λ_min = -2 cos(π/6) = -√3
        let c = 0.61961524227066319_f64;
        // recover c from Θ*: θ_jj = c · d_j², so read it off the raw scale
        let sigma = truth.sigma_star();
        let theta = truth.theta_star();
        for j in 0..5 {
            assert_eq!(sigma[(j, j)], 1.0);
        }
        assert!((sigma[(0, 1)] - -0.59502007305775151).abs() < 1e-12);
        assert!((sigma[(1, 2)] - -0.66433647430343739).abs() < 1e-12);
        assert!((theta[(0, 1)] - 0.92115341455022055).abs() < 1e-12);
        // Θ* Σ* = I and the raw minimum eigenvalue convention held
        let prod = theta * sigma;
        let eye = DMatrix::identity(5, 5);
        assert!((prod - eye).abs().max() < 1e-10);
        let spec = chain_spec(5);
        let sa = adjacency(&spec).unwrap() * spec.strength;
        let lam = SymmetricEigen::new(sa).eigenvalues.min();
        assert!((0.1 - lam - c).abs() < 1e-12);
    }

    #[test]
    fn support_is_exact() {
        for spec in [
            chain_spec(8),
            GraphSpec {
                structure: Structure::Random { edge_prob: 0.2 },
                p: 12,
                strength: 0.3,
                seed: 3,
            },
            GraphSpec {
                structure: Structure::Hub { groups: 2 },
                p: 9,
                strength: 0.3,
                seed: 0,
            },
        ] {
            let truth = make_ground_truth(&spec).unwrap();
            let theta = truth.theta_star();
            for j in 0..spec.p {
                for k in (j + 1)..spec.p {
                    if truth.edges().contains(j, k) {
                        assert!(theta[(j, k)].abs() > 1e-6, "edge ({j},{k}) vanished");
                    } else {
                        assert_eq!(theta[(j, k)], 0.0, "phantom entry at ({j},{k})");
                    }
                }
            }
            assert!(Cholesky::new(theta.clone()).is_some(), "theta not PD");
        }
    }

    #[test]
    fn chain_degrees_and_edges() {
        let truth = make_ground_truth(&chain_spec(30)).unwrap();
        assert_eq!(truth.edges().len(), 29);
        assert_eq!(truth.max_degree(), 2);
        for j in 0..29 {
            assert!(truth.edges().contains(j, j + 1));
        }
    }

    #[test]
    fn random_graph_density_and_determinism() {
        let spec = GraphSpec {
            structure: Structure::Random { edge_prob: 1.0 / 50.0 },
            p: 100,
            strength: 0.3,
            seed: 11,
        };
        let t1 = make_ground_truth(&spec).unwrap();
        let t2 = make_ground_truth(&spec).unwrap();
        assert_eq!(t1.edges(), t2.edges());
        assert_eq!(t1.theta_star(), t2.theta_star());
        // 4950 pairs at 2% — expect about 99 edges
        let count = t1.edges().len();
        assert!((50..=150).contains(&count), "unusual edge count {count}");
        let other = make_ground_truth(&GraphSpec { seed: 12, ..spec }).unwrap();
        assert_ne!(t1.edges(), other.edges());
    }

    #[test]
    fn hub_partition_layout() {
        let truth = make_ground_truth(&GraphSpec {
            structure: Structure::Hub { groups: 2 },
            p: 9,
            strength: 0.3,
            seed: 0,
        })
        .unwrap();
        // blocks {0..4} and {5..8}, hubs 0 and 5
        let mut expect = EdgeSet::new();
        for m in 1..5 {
            expect.insert(0, m);
        }
        for m in 6..9 {
            expect.insert(5, m);
        }
        assert_eq!(truth.edges(), &expect);
        assert_eq!(truth.max_degree(), 4);

        let star = make_ground_truth(&GraphSpec {
            structure: Structure::Hub { groups: 1 },
            p: 4,
            strength: 0.3,
            seed: 0,
        })
        .unwrap();
        assert_eq!(star.edges().len(), 3);
        assert_eq!(star.max_degree(), 3);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(make_ground_truth(&GraphSpec { p: 1, ..chain_spec(1) }).is_err());
        assert!(make_ground_truth(&GraphSpec {
            strength: 0.0,
            ..chain_spec(5)
        })
        .is_err());
        assert!(make_ground_truth(&GraphSpec {
            structure: Structure::Random { edge_prob: 1.4 },
            ..chain_spec(5)
        })
        .is_err());
        // group of size 1 would leave an isolated hub
        assert!(make_ground_truth(&GraphSpec {
            structure: Structure::Hub { groups: 3 },
            p: 5,
            strength: 0.3,
            seed: 0,
        })
        .is_err());
    }

    #[test]
    fn latent_sampler_moments_and_determinism() {
        let truth = make_ground_truth(&chain_spec(5)).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let x = sample_latent(&truth, 20_000, &mut rng).unwrap();
        let n = x.nrows() as f64;
        // empirical covariance (mean-free model, use raw cross moments)
        let emp = x.transpose() * &x / n;
        let dev = (&emp - truth.sigma_star()).abs().max();
        assert!(dev < 0.05, "moment deviation {dev}");

        let mut rng2 = ChaCha12Rng::seed_from_u64(42);
        let y = sample_latent(&truth, 20_000, &mut rng2).unwrap();
        assert_eq!(x, y, "same seed must reproduce the draw bitwise");
    }

    #[test]
    fn truncation_windows_and_idempotence() {
        let scheme = make_scheme(
            &SchemeKind::Custom(vec![(-0.5, 2.0), (0.25, 1.0)]),
            2,
        )
        .unwrap();
        let latent = DMatrix::from_row_slice(4, 2, &[
            0.3, 0.5, // both inside
            -0.6, 0.25, // first below, second exactly at the lower edge
            2.0, 1.2, // first exactly at the upper edge, second above
            -0.5, 0.1, // first exactly at the lower edge, second below
        ]);
        let y = truncate(&latent, &scheme).unwrap();
        let v = y.values();
        assert_eq!(v[(0, 0)], 0.3);
        assert_eq!(v[(0, 1)], 0.5);
        assert_eq!(v[(1, 0)], 0.0);
        assert_eq!(v[(1, 1)], 0.25, "window edges are inclusive");
        assert_eq!(v[(2, 0)], 2.0);
        assert_eq!(v[(2, 1)], 0.0);
        assert_eq!(v[(3, 0)], -0.5);
        assert_eq!(v[(3, 1)], 0.0);

        let again = truncate(v, &scheme).unwrap();
        assert_eq!(again.values(), v, "truncation must be idempotent");
    }

    #[test]
    fn scheme_layouts() {
        let ident = make_scheme(&SchemeKind::Identical { lower: -0.5, upper: 2.0 }, 4).unwrap();
        assert_eq!(ident.lower(), &[-0.5; 4]);
        assert_eq!(ident.upper(), &[2.0; 4]);

        let dec = make_scheme(&SchemeKind::Decreasing, 4).unwrap();
        assert_eq!(dec.lower(), &[-1.0; 4]);
        assert_eq!(dec.upper(), &[2.0, 1.5, 1.0, 0.5]);

        assert!(make_scheme(&SchemeKind::Custom(vec![(0.0, 1.0)]), 3).is_err());
        // reversed window rejected by the scheme validator
        assert!(make_scheme(&SchemeKind::Identical { lower: 2.0, upper: -0.5 }, 3).is_err());
    }

    #[test]
    fn zero_rates_match_marginal_tail_mass() {
        // retention of N(0,1) on the window gives the censoring rates
        let p = 6;
        let ident = make_scheme(&SchemeKind::Identical { lower: -0.5, upper: 2.0 }, p).unwrap();
        for j in 0..p {
            assert!((1.0 - ident.retention(j) - 0.3312876706741661).abs() < 1e-12);
        }
        let sym = make_scheme(&SchemeKind::Identical { lower: -1.0, upper: 1.0 }, p).unwrap();
        assert!((1.0 - sym.retention(0) - 0.3173105078629141).abs() < 1e-12);
        let dec = make_scheme(&SchemeKind::Decreasing, p).unwrap();
        assert!((1.0 - dec.retention(0) - 0.18140538587963626).abs() < 1e-12);
        assert!((1.0 - dec.retention(p - 1) - 0.46719279265744395).abs() < 1e-12);

        // empirical check on simulated chain data
        let truth = make_ground_truth(&chain_spec(p)).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let x = sample_latent(&truth, 20_000, &mut rng).unwrap();
        let y = truncate(&x, &dec).unwrap();
        for j in [0, p - 1] {
            let zeros = (0..y.n()).filter(|&i| y.values()[(i, j)] == 0.0).count();
            let rate = zeros as f64 / y.n() as f64;
            let want = 1.0 - dec.retention(j);
            assert!(
                (rate - want).abs() < 0.015,
                "column {j}: empirical {rate} vs {want}"
            );
        }
    }

    #[test]
    fn explicit_truth_recovers_generated_support() {
        let truth = make_ground_truth(&chain_spec(6)).unwrap();
        let rebuilt =
            GroundTruth::new(truth.theta_star().clone(), truth.sigma_star().clone()).unwrap();
        assert_eq!(rebuilt.edges(), truth.edges());
        assert_eq!(rebuilt.max_degree(), truth.max_degree());
    }

    #[test]
    fn explicit_truth_rejects_bad_inputs() {
        let truth = make_ground_truth(&chain_spec(4)).unwrap();
        let theta = truth.theta_star().clone();
        let sigma = truth.sigma_star().clone();

        // not inverse to each other
        let err = GroundTruth::new(theta.clone(), DMatrix::identity(4, 4)).unwrap_err();
        eprintln!("non-inverse pair: {err}");
        assert!(err.to_string().contains("identity"));

        // covariance diagonal off unit scale
        let scaled = &sigma * 2.0;
        assert!(GroundTruth::new(theta.clone() * 0.5, scaled).is_err());

        // asymmetric precision
        let mut lopsided = theta.clone();
        lopsided[(0, 1)] += 1e-3;
        assert!(GroundTruth::new(lopsided, sigma.clone()).is_err());

        // indefinite precision
        let mut indefinite = theta;
        indefinite[(0, 0)] = -1.0;
        assert!(GroundTruth::new(indefinite, sigma).is_err());
    }
}
