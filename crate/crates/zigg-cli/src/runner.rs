//! The batch experiment: one truth, many repetitions, per-method graph
//! recovery, aggregated detection rates.
//!
//! Determinism contract: (config, seed) fully determine every output byte.
//! Repetitions run in a work pool but are keyed by index, every repetition
//! derives its own rng streams from the master seed, and aggregation walks
//! results in index order — so the worker count never shows in the output.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;

use zigg::diagnostics::{baseline_covariance, detection_rates, DetectionReport, PairLabel};
use zigg::glasso::{ebic_select, edge_set, lambda_path, stars_select, EdgeSet, ZERO_TOL};
use zigg::pairlik::{estimate_covariance, psd_repair, ZeroInflatedMatrix};
use zigg::seeds::{derive_seed, STREAM_LATENT, STREAM_STARS, STREAM_TRUTH};
use zigg::simgen::{make_ground_truth, make_scheme, sample_latent, truncate, GroundTruth};
use zigg::truncdist::TruncationScheme;

use crate::config::{ExperimentConfig, MethodName, SelectionConfig, StructureName};
use crate::error::CliError;
use crate::formats::write_detection_csv;

/// A repetition that could not produce an estimate for a method. Recorded
/// in the metadata and excluded from the rates, never silently dropped.
#[derive(Debug, Clone, Serialize)]
pub struct RepFailure {
    pub repetition: usize,
    pub method: String,
    pub error: String,
}

/// Everything a finished experiment produced, before serialization.
pub struct ExperimentOutcome {
    pub truth: GroundTruth,
    /// One report per configured method, ours before baseline.
    pub reports: Vec<DetectionReport>,
    pub failures: Vec<RepFailure>,
}

fn canonical_methods(config: &ExperimentConfig) -> Vec<MethodName> {
    let mut out = Vec::new();
    for m in [MethodName::Ours, MethodName::Baseline] {
        if config.methods.contains(&m) {
            out.push(m);
        }
    }
    out
}

/// One method's full pipeline on one repetition's data: build the input
/// matrix, pick a penalty, solve, read off the edges.
fn method_edges(
    method: MethodName,
    y: &ZeroInflatedMatrix,
    scheme: &TruncationScheme,
    config: &ExperimentConfig,
    master_seed: u64,
    rep: usize,
) -> zigg::Result<EdgeSet> {
    let est_cfg = config.estimator.to_config();
    let solver = config.solver.to_config();
    let n = y.n();

    let build = |data: &ZeroInflatedMatrix| -> zigg::Result<DMatrix<f64>> {
        match method {
            MethodName::Ours => {
                let (cov, _flags) = estimate_covariance(data, scheme, &est_cfg)?;
                Ok(psd_repair(&cov, est_cfg.eps_psd)?.into_matrix())
            }
            MethodName::Baseline => Ok(baseline_covariance(data)?.into_matrix()),
        }
    };

    let s_full = build(y)?;
    let path = lambda_path(&s_full, config.solver.path_len, config.solver.ratio)?;
    let est = match config.selection {
        SelectionConfig::Ebic { gamma } => ebic_select(&s_full, n, &path, gamma, &solver)?.1,
        SelectionConfig::Stars { subsamples, beta } => {
            // a separate stream per (repetition, method): enabling or
            // disabling the other method never changes this one's draws
            let stream = rep as u64 * 2
                + match method {
                    MethodName::Ours => 0,
                    MethodName::Baseline => 1,
                };
            let mut rng =
                ChaCha12Rng::seed_from_u64(derive_seed(master_seed, STREAM_STARS, stream));
            let estimator = |rows: &[usize]| -> zigg::Result<DMatrix<f64>> {
                if rows.len() == n {
                    return Ok(s_full.clone());
                }
                build(&y.select_rows(rows)?)
            };
            stars_select(estimator, n, &path, subsamples, beta, &mut rng, &solver)?.1
        }
    };
    Ok(edge_set(&est, ZERO_TOL))
}

type RepOutcome = Vec<(MethodName, Result<EdgeSet, String>)>;

fn run_rep(
    rep: usize,
    truth: &GroundTruth,
    scheme: &TruncationScheme,
    config: &ExperimentConfig,
    master_seed: u64,
    methods: &[MethodName],
) -> RepOutcome {
    let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(master_seed, STREAM_LATENT, rep as u64));
    let data = sample_latent(truth, config.n, &mut rng).and_then(|x| truncate(&x, scheme));
    match data {
        Ok(y) => methods
            .iter()
            .map(|&m| {
                let r = method_edges(m, &y, scheme, config, master_seed, rep)
                    .map_err(|e| e.to_string());
                (m, r)
            })
            .collect(),
        Err(e) => methods
            .iter()
            .map(|&m| (m, Err(e.to_string())))
            .collect(),
    }
}

/// Runs the whole experiment: truth generated once, then per-repetition
/// sampling, estimation, selection, and solving for every configured
/// method.
pub fn run_experiment(config: &ExperimentConfig, seed: u64) -> Result<ExperimentOutcome, CliError> {
    config.validate()?;
    let truth = make_ground_truth(&config.graph.to_spec(derive_seed(seed, STREAM_TRUTH, 0))?)?;
    let scheme = make_scheme(&config.scheme.to_kind()?, config.graph.p)?;
    let methods = canonical_methods(config);

    let per_rep: Vec<RepOutcome> = (0..config.repetitions)
        .into_par_iter()
        .map(|r| run_rep(r, &truth, &scheme, config, seed, &methods))
        .collect();

    let chain_labels = matches!(config.graph.structure, StructureName::Chain);
    let mut failures = Vec::new();
    let mut reports = Vec::new();
    for &m in &methods {
        let mut sets = Vec::new();
        for (rep, outcome) in per_rep.iter().enumerate() {
            let (_, result) = outcome
                .iter()
                .find(|(name, _)| *name == m)
                .expect("method present per construction");
            match result {
                Ok(edges) => sets.push(edges.clone()),
                Err(msg) => {
                    eprintln!(
                        "warning: repetition {} ({}) failed and is excluded: {msg}",
                        rep + 1,
                        m.to_method()
                    );
                    failures.push(RepFailure {
                        repetition: rep + 1,
                        method: m.to_method().to_string(),
                        error: msg.clone(),
                    });
                }
            }
        }
        if sets.is_empty() {
            return Err(CliError::Numerical(format!(
                "method {}: every repetition failed",
                m.to_method()
            )));
        }
        reports.push(detection_rates(&sets, &truth, chain_labels, m.to_method())?);
    }

    Ok(ExperimentOutcome {
        truth,
        reports,
        failures,
    })
}

#[derive(Serialize)]
struct ToolInfo {
    name: &'static str,
    version: &'static str,
}

#[derive(Serialize)]
struct SeedStreams {
    truth: u64,
    latent: u64,
    stars: u64,
}

/// Fixed algorithm constants that are not configurable but shape results;
/// echoed so an output directory documents the full procedure.
#[derive(Serialize)]
struct Constants {
    quadrature_nodes: usize,
    edge_zero_tol: f64,
    sigma_search: &'static str,
    tie_break: &'static str,
    delta_floor: f64,
    stars_subsample_rule: &'static str,
    rng: &'static str,
    seed_streams: SeedStreams,
}

impl Constants {
    fn shipped() -> Self {
        Self {
            quadrature_nodes: 64,
            edge_zero_tol: ZERO_TOL,
            sigma_search: "coarse-grid-then-brent",
            tie_break: "smaller-absolute-sigma",
            delta_floor: zigg::truncdist::DELTA_MIN,
            stars_subsample_rule: "floor(10*sqrt(n)) without replacement",
            rng: "chacha12",
            seed_streams: SeedStreams {
                truth: STREAM_TRUTH,
                latent: STREAM_LATENT,
                stars: STREAM_STARS,
            },
        }
    }
}

#[derive(Serialize)]
struct TruthInfo {
    p: usize,
    edge_count: usize,
    max_degree: usize,
}

#[derive(Serialize)]
struct MethodSummary {
    repetitions_used: usize,
    mean_rate_true_edge: Option<f64>,
    mean_rate_skip_one: Option<f64>,
    mean_rate_other_false: Option<f64>,
}

#[derive(Serialize)]
struct Metadata<'a> {
    tool: ToolInfo,
    seed: u64,
    config: &'a ExperimentConfig,
    /// The truncation window actually applied to each coordinate.
    scheme_windows: Vec<(f64, f64)>,
    constants: Constants,
    truth: TruthInfo,
    failures: &'a [RepFailure],
    summary: BTreeMap<String, MethodSummary>,
}

/// Writes `detection.csv` and `metadata.json` into `dir`.
pub fn write_outputs(
    config: &ExperimentConfig,
    seed: u64,
    outcome: &ExperimentOutcome,
    dir: &Path,
) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;

    let refs: Vec<&DetectionReport> = outcome.reports.iter().collect();
    write_detection_csv(&dir.join("detection.csv"), &refs)?;

    let mut summary = BTreeMap::new();
    for report in &outcome.reports {
        summary.insert(
            report.method().to_string(),
            MethodSummary {
                repetitions_used: report.repetitions(),
                mean_rate_true_edge: report.mean_rate(PairLabel::TrueEdge),
                mean_rate_skip_one: report.mean_rate(PairLabel::SkipOne),
                mean_rate_other_false: report.mean_rate(PairLabel::OtherFalse),
            },
        );
    }
    let mut config_echo = config.clone();
    config_echo.seed = Some(seed);
    config_echo.scheme = config_echo.scheme.resolved();
    let scheme = make_scheme(&config.scheme.to_kind()?, config.graph.p)?;
    let scheme_windows = (0..scheme.p())
        .map(|j| (scheme.lower()[j], scheme.upper()[j]))
        .collect();
    let metadata = Metadata {
        tool: ToolInfo {
            name: "zigg-cli",
            version: env!("CARGO_PKG_VERSION"),
        },
        seed,
        config: &config_echo,
        scheme_windows,
        constants: Constants::shipped(),
        truth: TruthInfo {
            p: outcome.truth.p(),
            edge_count: outcome.truth.edges().len(),
            max_degree: outcome.truth.max_degree(),
        },
        failures: &outcome.failures,
        summary,
    };
    let path = dir.join("metadata.json");
    let mut text = serde_json::to_string_pretty(&metadata)
        .map_err(|e| CliError::Validation(format!("metadata serialization: {e}")))?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))
}
