//! Thin argument-parsing shell around [`dppca::cli::run`].

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dppca::cli::{parse_grid, AuditKind, CommandKind, InputSource, RunConfig};
use dppca::mechanism::SamplerMode;

#[derive(Parser)]
#[command(
    name = "dppca",
    version,
    about = "Differentially private PCA via the exponential mechanism on orthonormal frames"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InputArgs {
    /// Input dataset as CSV (rows = samples, optional header).
    #[arg(long, value_name = "FILE", conflicts_with = "synth")]
    input: Option<PathBuf>,
    /// Synthetic spiked dataset, e.g. `spiked:300,2,3,2.5,1,1`
    /// (p, k, spikes..., bulk, theta).
    #[arg(long, value_name = "SPEC")]
    synth: Option<String>,
    /// Master seed (default 0x5EED, echoed in every artifact).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for batch sampling (results are worker-independent).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct SamplerArgs {
    /// Sampler backing the mechanism: `approximate` or `exact-mh`.
    #[arg(long, default_value = "approximate")]
    sampler: String,
    /// Burn-in steps for the exact-mh sampler.
    #[arg(long, default_value_t = 64)]
    mh_burnin: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Rank-transform a dataset, certifying the sqrt(p) row-norm bound.
    Preprocess {
        #[command(flatten)]
        input: InputArgs,
        /// Transformed CSV output path.
        #[arg(long, value_name = "FILE")]
        output: PathBuf,
        /// JSON summary path (default: output with .report.json).
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
    },
    /// Draw privatized principal components from the Gibbs distribution.
    Privatize {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        sampler: SamplerArgs,
        /// Frame output path (.csv, or .bin for the binary format).
        #[arg(long, value_name = "FILE")]
        output: PathBuf,
        /// JSON report path (default: output with .report.json).
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
        /// Number of components.
        #[arg(long)]
        k: usize,
        /// Noise parameter (0 = pure noise / perfect privacy).
        #[arg(long)]
        beta: f64,
    },
    /// Compute beta(w^2) and the privacy profile for a target w-AGDP level.
    Calibrate {
        #[command(flatten)]
        input: InputArgs,
        /// Report JSON output path.
        #[arg(long, value_name = "FILE")]
        output: PathBuf,
        /// Optional beta -> sigma_beta curve CSV.
        #[arg(long, value_name = "FILE")]
        curve: Option<PathBuf>,
        #[arg(long)]
        k: usize,
        /// Target GDP parameter w (the guarantee aims for w^2).
        #[arg(long)]
        w: f64,
    },
    /// Utility predictions over a beta grid.
    Predict {
        #[command(flatten)]
        input: InputArgs,
        /// Report JSON output path.
        #[arg(long, value_name = "FILE")]
        output: PathBuf,
        /// Optional beta -> spec_err_sq curve CSV.
        #[arg(long, value_name = "FILE")]
        curve: Option<PathBuf>,
        #[arg(long)]
        k: usize,
        /// Grid as `a,b,c` or `start:stop:step`.
        #[arg(long, value_name = "GRID")]
        beta_grid: String,
    },
    /// Adaptive exponential mechanism with a private feasibility test.
    Adaptive {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        sampler: SamplerArgs,
        /// Output matrix path (zeros when the test fails).
        #[arg(long, value_name = "FILE")]
        output: PathBuf,
        /// JSON report path (default: output with .report.json).
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
        #[arg(long)]
        k: usize,
        /// Calibration privacy budget rho.
        #[arg(long)]
        rho: f64,
        /// Target GDP parameter w; the composed guarantee is sqrt(rho^2+w^2).
        #[arg(long)]
        w: f64,
    },
    /// Monte-Carlo utility and trade-off estimation with theory overlays.
    Audit {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        sampler: SamplerArgs,
        /// Report JSON output path.
        #[arg(long, value_name = "FILE")]
        output: PathBuf,
        /// Optional alpha -> beta_hat curve CSV.
        #[arg(long, value_name = "FILE")]
        curve: Option<PathBuf>,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        beta: f64,
        /// Draws per hypothesis.
        #[arg(long, default_value_t = 5000)]
        n_mc: usize,
        /// Type I error grid as `a,b,c` or `start:stop:step`.
        #[arg(long, value_name = "GRID")]
        alpha_grid: Option<String>,
        /// Which estimates to produce: utility, tradeoff, or both.
        #[arg(long, default_value = "both")]
        kind: String,
        /// Replace the alternative by a second independent null batch.
        #[arg(long, default_value_t = false)]
        null_calibration: bool,
    },
}

fn to_input_source(args: &InputArgs) -> Result<Option<InputSource>, dppca::Error> {
    if let Some(path) = &args.input {
        return Ok(Some(InputSource::Csv(path.clone())));
    }
    if let Some(spec) = &args.synth {
        return Ok(Some(InputSource::Synth(spec.parse()?)));
    }
    Ok(None)
}

fn build_config(command: Command) -> Result<RunConfig, dppca::Error> {
    let config = match command {
        Command::Preprocess {
            input,
            output,
            report,
        } => {
            let mut c = RunConfig::new(CommandKind::Preprocess);
            c.input = to_input_source(&input)?;
            c.seed = input.seed;
            c.workers = input.workers;
            c.output = Some(output);
            c.report = report;
            c
        }
        Command::Privatize {
            input,
            sampler,
            output,
            report,
            k,
            beta,
        } => {
            let mut c = RunConfig::new(CommandKind::Privatize);
            c.input = to_input_source(&input)?;
            c.seed = input.seed;
            c.workers = input.workers;
            c.output = Some(output);
            c.report = report;
            c.k = Some(k);
            c.beta = Some(beta);
            c.sampler_mode = sampler.sampler.parse::<SamplerMode>()?;
            c.mh_burnin = sampler.mh_burnin;
            c
        }
        Command::Calibrate {
            input,
            output,
            curve,
            k,
            w,
        } => {
            let mut c = RunConfig::new(CommandKind::Calibrate);
            c.input = to_input_source(&input)?;
            c.seed = input.seed;
            c.workers = input.workers;
            c.output = Some(output);
            c.curve = curve;
            c.k = Some(k);
            c.w = Some(w);
            c
        }
        Command::Predict {
            input,
            output,
            curve,
            k,
            beta_grid,
        } => {
            let mut c = RunConfig::new(CommandKind::Predict);
            c.input = to_input_source(&input)?;
            c.seed = input.seed;
            c.workers = input.workers;
            c.output = Some(output);
            c.curve = curve;
            c.k = Some(k);
            c.beta_grid = Some(parse_grid(&beta_grid)?);
            c
        }
        Command::Adaptive {
            input,
            sampler,
            output,
            report,
            k,
            rho,
            w,
        } => {
            let mut c = RunConfig::new(CommandKind::Adaptive);
            c.input = to_input_source(&input)?;
            c.seed = input.seed;
            c.workers = input.workers;
            c.output = Some(output);
            c.report = report;
            c.k = Some(k);
            c.rho = Some(rho);
            c.w = Some(w);
            c.sampler_mode = sampler.sampler.parse::<SamplerMode>()?;
            c.mh_burnin = sampler.mh_burnin;
            c
        }
        Command::Audit {
            input,
            sampler,
            output,
            curve,
            k,
            beta,
            n_mc,
            alpha_grid,
            kind,
            null_calibration,
        } => {
            let mut c = RunConfig::new(CommandKind::Audit);
            c.input = to_input_source(&input)?;
            c.seed = input.seed;
            c.workers = input.workers;
            c.output = Some(output);
            c.curve = curve;
            c.k = Some(k);
            c.beta = Some(beta);
            c.n_mc = Some(n_mc);
            c.alpha_grid = alpha_grid.as_deref().map(parse_grid).transpose()?;
            c.audit_kind = kind.parse::<AuditKind>()?;
            c.null_calibration = null_calibration;
            c.sampler_mode = sampler.sampler.parse::<SamplerMode>()?;
            c.mh_burnin = sampler.mh_burnin;
            c
        }
    };
    Ok(config)
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let config = match build_config(cli.command) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match dppca::cli::run(&config) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
