use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use zigg_cli::commands;
use zigg_cli::CliError;

/// Batch tool for recovering conditional-dependency graphs from
/// zero-inflated, doubly-truncated observations: pairwise truncated-
/// likelihood covariance estimation followed by the graphical lasso.
#[derive(Parser)]
#[command(name = "zigg", version, about, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a ground truth and one zero-inflated dataset.
    ///
    /// Writes data.csv, scheme.csv, and truth.json into the output
    /// directory.
    Simulate {
        /// JSON experiment config; omitted fields take documented defaults.
        #[arg(long)]
        config: PathBuf,
        /// Master seed (overrides the config's seed; defaults to 0).
        #[arg(long)]
        seed: Option<u64>,
        /// Where to write the files (overrides the config's output_dir).
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Step 1: estimate the latent covariance from a data + scheme file.
    ///
    /// Writes the repaired correlation matrix as a headerless CSV grid.
    EstimateCov {
        /// Headerless CSV, one row per observation; literal 0 = censored.
        #[arg(long)]
        data: PathBuf,
        /// Truncation scheme CSV with columns index,a,b (1-based).
        #[arg(long)]
        scheme: PathBuf,
        /// Output path for the estimated matrix.
        #[arg(long)]
        output: PathBuf,
        /// Optional output path for per-pair estimation flags.
        #[arg(long)]
        flags: Option<PathBuf>,
        /// Margin of the sigma search interval [-1+delta, 1-delta].
        #[arg(long)]
        delta: Option<f64>,
        /// Coarse grid size before Brent refinement.
        #[arg(long)]
        grid_points: Option<usize>,
        /// Absolute tolerance of the sigma refinement.
        #[arg(long)]
        tol_sigma: Option<f64>,
        /// Eigenvalue floor of the positive-definiteness repair.
        #[arg(long)]
        eps_psd: Option<f64>,
    },
    /// Step 2: graphical lasso on a covariance file.
    ///
    /// Writes <prefix>.theta.csv, <prefix>.w.csv, <prefix>.edges.csv and
    /// <prefix>.summary.json.
    Glasso {
        /// Headerless CSV holding the symmetric input matrix.
        #[arg(long)]
        covariance: PathBuf,
        /// Fixed penalty (mutually exclusive with --select).
        #[arg(long)]
        lambda: Option<f64>,
        /// Penalty selection rule; only "ebic" works on a covariance file.
        #[arg(long)]
        select: Option<String>,
        /// Sample count behind the covariance (required by --select ebic).
        #[arg(long)]
        n: Option<usize>,
        /// EBIC sparsity weight.
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        /// Number of path points for selection.
        #[arg(long, default_value_t = 20)]
        path_len: usize,
        /// Smallest penalty as a fraction of the largest.
        #[arg(long, default_value_t = 0.01)]
        ratio: f64,
        /// Sweep convergence tolerance.
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        /// Maximum number of sweeps.
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        /// Prefix of the output files.
        #[arg(long)]
        output_prefix: PathBuf,
    },
    /// Full batch experiment: repetitions, both methods, detection rates.
    ///
    /// Writes detection.csv and metadata.json; (config, seed) determine the
    /// bytes exactly.
    RunExperiment {
        /// JSON experiment config; omitted fields take documented defaults.
        #[arg(long)]
        config: PathBuf,
        /// Master seed; mandatory so runs are reproducible by construction.
        #[arg(long)]
        seed: u64,
        /// Where to write the files (overrides the config's output_dir).
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Report the theoretical constants of a configured ground truth.
    Diagnose {
        /// JSON experiment config (only the graph section matters).
        #[arg(long)]
        config: PathBuf,
        /// Master seed (only random structures consume it; defaults to 0).
        #[arg(long)]
        seed: Option<u64>,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            config,
            seed,
            output_dir,
        } => commands::simulate(&config, seed, output_dir),
        Command::EstimateCov {
            data,
            scheme,
            output,
            flags,
            delta,
            grid_points,
            tol_sigma,
            eps_psd,
        } => commands::estimate_cov(
            &data,
            &scheme,
            &output,
            flags,
            delta,
            grid_points,
            tol_sigma,
            eps_psd,
        ),
        Command::Glasso {
            covariance,
            lambda,
            select,
            n,
            gamma,
            path_len,
            ratio,
            tol,
            max_iter,
            output_prefix,
        } => commands::glasso_cmd(
            &covariance,
            lambda,
            select,
            n,
            gamma,
            path_len,
            ratio,
            tol,
            max_iter,
            &output_prefix,
        ),
        Command::RunExperiment {
            config,
            seed,
            output_dir,
        } => commands::run_experiment_cmd(&config, seed, output_dir),
        Command::Diagnose {
            config,
            seed,
            output,
        } => commands::diagnose(&config, seed, output),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
