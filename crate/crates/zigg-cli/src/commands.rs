//! Implementations of the subcommands. Each returns through [`CliError`],
//! which the binary maps to exit codes (2 validation, 3 numerical).

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;
use std::path::{Path, PathBuf};

use zigg::diagnostics::{incoherence_alpha, theory_constants};
use zigg::glasso::{
    ebic_select, edge_set, graphical_lasso, lambda_path, PrecisionEstimate, SolverConfig, ZERO_TOL,
};
use zigg::pairlik::{estimate_covariance, psd_repair, EstimatorConfig};
use zigg::seeds::{derive_seed, STREAM_LATENT, STREAM_TRUTH};
use zigg::simgen::{make_ground_truth, make_scheme, sample_latent, truncate};

use crate::config::{ExperimentConfig, GraphConfig};
use crate::error::CliError;
use crate::formats::{
    read_data_csv, read_matrix_csv, read_scheme_csv, write_data_csv, write_edges_csv,
    write_flags_csv, write_matrix_csv, write_scheme_csv,
};
use crate::runner;

/// Resolution order for seeds on subcommands where the flag is optional:
/// flag, then config file, then 0.
pub fn resolve_seed(flag: Option<u64>, config: &ExperimentConfig) -> u64 {
    flag.or(config.seed).unwrap_or(0)
}

#[derive(Serialize)]
struct TruthFile {
    p: usize,
    n: usize,
    seed: u64,
    edge_count: usize,
    max_degree: usize,
    /// 1-based pairs, ascending.
    edges: Vec<(usize, usize)>,
}

/// `zigg simulate`: one truth, one dataset, written as plain files.
pub fn simulate(
    config_path: &Path,
    seed_flag: Option<u64>,
    output_dir: Option<PathBuf>,
) -> Result<(), CliError> {
    let config = ExperimentConfig::load(config_path)?;
    let seed = resolve_seed(seed_flag, &config);
    let dir = output_dir.unwrap_or_else(|| config.output_dir.clone());

    let truth = make_ground_truth(&config.graph.to_spec(derive_seed(seed, STREAM_TRUTH, 0))?)?;
    let scheme = make_scheme(&config.scheme.to_kind()?, config.graph.p)?;
    let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, STREAM_LATENT, 0));
    let latent = sample_latent(&truth, config.n, &mut rng)?;
    let data = truncate(&latent, &scheme)?;

    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    write_data_csv(&dir.join("data.csv"), &data)?;
    write_scheme_csv(&dir.join("scheme.csv"), &scheme)?;
    let truth_file = TruthFile {
        p: truth.p(),
        n: config.n,
        seed,
        edge_count: truth.edges().len(),
        max_degree: truth.max_degree(),
        edges: truth.edges().iter().map(|(j, k)| (j + 1, k + 1)).collect(),
    };
    write_json(&dir.join("truth.json"), &truth_file)?;
    println!(
        "simulated {} observations of {} variables ({} true edges) into {}",
        config.n,
        truth.p(),
        truth.edges().len(),
        dir.display()
    );
    Ok(())
}

/// `zigg estimate-cov`: Step 1 plus the positive-definiteness repair.
#[allow(clippy::too_many_arguments)]
pub fn estimate_cov(
    data_path: &Path,
    scheme_path: &Path,
    output: &Path,
    flags_path: Option<PathBuf>,
    delta: Option<f64>,
    grid_points: Option<usize>,
    tol_sigma: Option<f64>,
    eps_psd: Option<f64>,
) -> Result<(), CliError> {
    let data = read_data_csv(data_path)?;
    let scheme = read_scheme_csv(scheme_path)?;
    let defaults = EstimatorConfig::default();
    let cfg = EstimatorConfig {
        delta: delta.unwrap_or(defaults.delta),
        grid_points: grid_points.unwrap_or(defaults.grid_points),
        tol_sigma: tol_sigma.unwrap_or(defaults.tol_sigma),
        eps_psd: eps_psd.unwrap_or(defaults.eps_psd),
    };
    let (cov, flags) = estimate_covariance(&data, &scheme, &cfg)?;
    let repaired = psd_repair(&cov, cfg.eps_psd)?;
    write_matrix_csv(output, repaired.matrix())?;
    if let Some(fp) = &flags_path {
        write_flags_csv(fp, &flags)?;
    }
    println!(
        "estimated a {p} x {p} covariance from {n} observations; {f} flagged pair(s)",
        p = data.p(),
        n = data.n(),
        f = flags.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct GlassoSummary {
    p: usize,
    lambda: f64,
    selection: &'static str,
    iterations: usize,
    kkt_residual: f64,
    edge_count: usize,
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{}.{suffix}", prefix.display()))
}

/// `zigg glasso`: solve at a fixed penalty or pick one by EBIC.
#[allow(clippy::too_many_arguments)]
pub fn glasso_cmd(
    covariance: &Path,
    lambda: Option<f64>,
    select: Option<String>,
    n: Option<usize>,
    gamma: f64,
    path_len: usize,
    ratio: f64,
    tol: f64,
    max_iter: usize,
    output_prefix: &Path,
) -> Result<(), CliError> {
    let s = read_matrix_csv(covariance)?;
    let solver = SolverConfig { tol, max_iter };
    let (lambda, est, selection): (f64, PrecisionEstimate, &'static str) =
        match (lambda, select.as_deref()) {
            (Some(_), Some(_)) => {
                return Err(CliError::Validation(
                    "--lambda and --select are mutually exclusive".into(),
                ))
            }
            (Some(l), None) => (l, graphical_lasso(&s, l, &solver)?, "fixed"),
            (None, Some("ebic")) => {
                let n = n.ok_or_else(|| {
                    CliError::Validation("--select ebic needs --n (sample count)".into())
                })?;
                let path = lambda_path(&s, path_len, ratio)?;
                let (l, est) = ebic_select(&s, n, &path, gamma, &solver)?;
                (l, est, "ebic")
            }
            (None, Some("stars")) => {
                return Err(CliError::Validation(
                    "stability selection resamples raw observations, which a covariance \
                     file no longer carries; use run-experiment for stars"
                        .into(),
                ))
            }
            (None, Some(other)) => {
                return Err(CliError::Validation(format!(
                    "unknown selection {other:?} (expected: ebic)"
                )))
            }
            (None, None) => {
                return Err(CliError::Validation(
                    "need --lambda or --select ebic".into(),
                ))
            }
        };
    let edges = edge_set(&est, ZERO_TOL);
    write_matrix_csv(&with_suffix(output_prefix, "theta.csv"), est.theta())?;
    write_matrix_csv(&with_suffix(output_prefix, "w.csv"), est.w())?;
    write_edges_csv(&with_suffix(output_prefix, "edges.csv"), &edges)?;
    let summary = GlassoSummary {
        p: est.p(),
        lambda,
        selection,
        iterations: est.iterations(),
        kkt_residual: est.kkt_residual(),
        edge_count: edges.len(),
    };
    write_json(&with_suffix(output_prefix, "summary.json"), &summary)?;
    println!(
        "lambda {} -> {} edge(s), kkt residual {}",
        lambda,
        edges.len(),
        est.kkt_residual()
    );
    Ok(())
}

/// `zigg run-experiment`: the full batch pipeline.
pub fn run_experiment_cmd(
    config_path: &Path,
    seed: u64,
    output_dir: Option<PathBuf>,
) -> Result<(), CliError> {
    let config = ExperimentConfig::load(config_path)?;
    let dir = output_dir.unwrap_or_else(|| config.output_dir.clone());
    let outcome = runner::run_experiment(&config, seed)?;
    runner::write_outputs(&config, seed, &outcome, &dir)?;
    for report in &outcome.reports {
        let mean = report
            .mean_rate(zigg::diagnostics::PairLabel::TrueEdge)
            .map(|r| r.to_string())
            .unwrap_or_else(|| "n/a".into());
        println!(
            "{}: mean true-edge detection {} over {} repetition(s)",
            report.method(),
            mean,
            report.repetitions()
        );
    }
    println!("wrote {}", dir.join("detection.csv").display());
    println!("wrote {}", dir.join("metadata.json").display());
    Ok(())
}

#[derive(Serialize)]
struct DiagnoseReport {
    graph: GraphConfig,
    seed: u64,
    p: usize,
    edge_count: usize,
    d: usize,
    alpha: f64,
    kappa_sigma: f64,
    kappa_gamma: f64,
}

/// `zigg diagnose`: the theoretical constants of a configured truth.
pub fn diagnose(
    config_path: &Path,
    seed_flag: Option<u64>,
    output: Option<PathBuf>,
) -> Result<(), CliError> {
    let config = ExperimentConfig::load(config_path)?;
    let seed = resolve_seed(seed_flag, &config);
    let truth = make_ground_truth(&config.graph.to_spec(derive_seed(seed, STREAM_TRUTH, 0))?)?;
    let constants = theory_constants(&truth)?;
    let alpha = incoherence_alpha(&truth)?;
    let report = DiagnoseReport {
        graph: config.graph.clone(),
        seed,
        p: truth.p(),
        edge_count: truth.edges().len(),
        d: constants.d,
        alpha,
        kappa_sigma: constants.kappa_sigma,
        kappa_gamma: constants.kappa_gamma,
    };
    match output {
        Some(path) => write_json(&path, &report)?,
        None => {
            let mut text = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::Validation(format!("report serialization: {e}")))?;
            text.push('\n');
            print!("{text}");
        }
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
