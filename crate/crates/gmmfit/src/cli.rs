//! Command-line surface: fit, score, sample, and verify subcommands.
//!
//! Exit codes: 0 success, 1 runtime error, 2 fit stopped at max_iter without
//! reaching tolerance, 64 usage error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Result;
use crate::fitter::{fit, FitConfig, InitMethod, TerminationReason};
use crate::io::{
    load_csv, load_model, save_model, write_dataset_csv, write_labels_csv,
    write_responsibilities_csv, write_trace,
};
use crate::sampler::{sample_dataset, RandomSource};
use crate::verifier::{check_minorization, check_update_equivalence};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_MAX_ITER: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser)]
#[command(
    name = "gmmfit",
    version,
    about = "Gaussian mixture maximum-likelihood estimation with a monotone surrogate-ascent fitter"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    /// Means start at randomly drawn distinct samples.
    Random,
    /// Distance-squared weighted seeding.
    Kmeanspp,
}

impl From<InitArg> for InitMethod {
    fn from(v: InitArg) -> Self {
        match v {
            InitArg::Random => InitMethod::RandomPoints,
            InitArg::Kmeanspp => InitMethod::KmeansPlusPlus,
        }
    }
}

#[derive(Args)]
struct FitArgs {
    /// CSV of samples, one row per sample.
    #[arg(long)]
    input: PathBuf,
    /// Number of mixture components.
    #[arg(long)]
    components: usize,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Relative log-likelihood change that stops the iteration.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Added to every covariance diagonal.
    #[arg(long, default_value_t = 1e-6)]
    cov_floor: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = InitArg::Kmeanspp)]
    init: InitArg,
    /// Where the fitted model is written.
    #[arg(long)]
    output: PathBuf,
    /// Optional per-iteration log-likelihood CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Skip the first input row.
    #[arg(long)]
    header: bool,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    header: bool,
    /// Optional CSV of the posterior component probabilities.
    #[arg(long)]
    responsibilities: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    model: PathBuf,
    /// Number of samples to draw.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
    /// Optional CSV of the latent component index per sample.
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Random trial models per minorization sweep.
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    header: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a mixture to CSV data and write the model.
    Fit(FitArgs),
    /// Print total and per-sample log-likelihood of data under a model.
    Score(ScoreArgs),
    /// Draw samples (and latent labels) from a saved model.
    Sample(SampleArgs),
    /// Check minorization, tangency, and update equivalence numerically.
    Verify(VerifyArgs),
}

/// Parse and dispatch; all outcomes become process exit codes.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Fit(args) => run_fit(args),
        Command::Score(args) => run_score(args),
        Command::Sample(args) => run_sample(args),
        Command::Verify(args) => run_verify(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn run_fit(args: FitArgs) -> Result<i32> {
    let data = load_csv(&args.input, args.header)?;
    let cfg = FitConfig {
        max_iter: args.max_iter,
        rel_tol: args.tol,
        cov_floor: args.cov_floor,
        seed: args.seed,
        init: args.init.into(),
        ..FitConfig::default()
    };
    let (model, trace) = fit(&data, args.components, &cfg)?;
    save_model(&model, &args.output)?;
    if let Some(path) = &args.trace {
        write_trace(&trace, path)?;
    }
    println!(
        "fit: {} iterations, log-likelihood {:.6}, {}",
        trace.iterations(),
        trace.final_loglik(),
        match trace.reason() {
            TerminationReason::Tolerance => "converged",
            TerminationReason::MaxIter => "stopped at max-iter",
        }
    );
    Ok(match trace.reason() {
        TerminationReason::Tolerance => EXIT_OK,
        TerminationReason::MaxIter => EXIT_MAX_ITER,
    })
}

fn run_score(args: ScoreArgs) -> Result<i32> {
    let data = load_csv(&args.input, args.header)?;
    let model = load_model(&args.model)?;
    let per_sample = model.per_sample_log_likelihood(&data)?;
    println!("sample,loglik");
    for (i, ll) in per_sample.iter().enumerate() {
        println!("{i},{ll:.16e}");
    }
    let total: f64 = per_sample.iter().sum();
    println!("total,{total:.16e}");
    if let Some(path) = &args.responsibilities {
        let r = model.responsibilities(&data)?;
        write_responsibilities_csv(&r, path)?;
    }
    Ok(EXIT_OK)
}

fn run_sample(args: SampleArgs) -> Result<i32> {
    let model = load_model(&args.model)?;
    let mut rng = RandomSource::new(args.seed);
    let (data, labels) = sample_dataset(&model, args.n, &mut rng)?;
    write_dataset_csv(&data, &args.output)?;
    if let Some(path) = &args.labels {
        write_labels_csv(&labels, path)?;
    }
    println!("sample: wrote {} rows of dimension {}", data.len(), data.dim());
    Ok(EXIT_OK)
}

fn run_verify(args: VerifyArgs) -> Result<i32> {
    let data = load_csv(&args.input, args.header)?;
    let model = load_model(&args.model)?;
    let report = check_minorization(&model, &data, args.trials, args.seed)?;
    let equivalent = check_update_equivalence(&model, &data)?;
    println!("log-likelihood at anchor: {:.16e}", report.theta_t_loglik);
    println!("surrogate at anchor:      {:.16e}", report.surrogate_at_theta_t);
    println!("trial points:             {}", report.trial_points);
    println!("bound violations:         {}", report.violations);
    println!("max violation:            {:.6e}", report.max_violation);
    println!(
        "update equivalence:       {}",
        if equivalent { "ok" } else { "FAILED" }
    );
    Ok(if report.passed() && equivalent {
        EXIT_OK
    } else {
        EXIT_ERROR
    })
}
