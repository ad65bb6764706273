use clap::{Args, Parser, Subcommand};
use informed_cli::commands::{cmd_diagnose, cmd_make_testset, cmd_render, cmd_sample, cmd_train};
use informed_cli::config::{ExperimentConfig, Overrides};
use informed_cli::exit_code;
use informed_mcmc::Error;
use std::path::PathBuf;
use std::process::ExitCode;

/// Posterior inference over small forward renderers with learned global
/// proposals.
#[derive(Parser)]
#[command(name = "informed", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Experiment configuration file (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Master seed override
    #[arg(long)]
    seed: Option<u64>,
    /// Sampler id override (mh, mhwg, bmhwg, pt, reg-mh, inf-mh,
    /// inf-indmh, inf-bmhwg)
    #[arg(long)]
    sampler: Option<String>,
    /// Mixture coefficient override
    #[arg(long)]
    alpha: Option<f64>,
    /// Local proposal standard deviation override
    #[arg(long)]
    sigma: Option<f64>,
    /// Iteration count override
    #[arg(long)]
    iters: Option<usize>,
    /// Chain count override
    #[arg(long)]
    chains: Option<usize>,
    /// Output directory override
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        let overrides = Overrides {
            seed: self.seed,
            sampler: self.sampler.clone(),
            alpha: self.alpha,
            sigma: self.sigma,
            iters: self.iters,
            chains: self.chains,
            out: self.out.clone(),
        };
        ExperimentConfig::load(&self.config, &overrides)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Learn the global proposal (simulate, featurize, cluster, fit KDEs)
    Train {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Generate ground-truth observations and their manifest
    MakeTestset {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the configured sampler over the test set
    Sample {
        #[command(flatten)]
        common: CommonArgs,
        /// Model file (defaults to <out_dir>/model.ispm)
        #[arg(long)]
        model: Option<PathBuf>,
        /// Single test case index (defaults to all)
        #[arg(long)]
        case: Option<usize>,
    },
    /// Compute convergence reports from stored traces
    Diagnose {
        #[command(flatten)]
        common: CommonArgs,
        /// Sampler id whose traces to diagnose (defaults to configured)
        #[arg(long)]
        sampler_id: Option<String>,
        /// Test case index
        #[arg(long, default_value_t = 0)]
        case: usize,
    },
    /// Render a parameter vector to an 8-bit preview image
    Render {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated parameter values
        #[arg(long, allow_hyphen_values = true)]
        theta: String,
        /// Output image path (.pgm for room, .ppm for tiles)
        #[arg(long)]
        out_file: PathBuf,
    },
}

fn run() -> Result<(), Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Train { common } => {
            let cfg = common.load()?;
            cmd_train(&cfg)?;
        }
        Command::MakeTestset { common } => {
            let cfg = common.load()?;
            cmd_make_testset(&cfg)?;
        }
        Command::Sample { common, model, case } => {
            let cfg = common.load()?;
            cmd_sample(&cfg, model.as_deref(), case)?;
        }
        Command::Diagnose { common, sampler_id, case } => {
            let cfg = common.load()?;
            let id = sampler_id.unwrap_or_else(|| cfg.sampler.id.clone());
            cmd_diagnose(&cfg, &id, case)?;
        }
        Command::Render { common, theta, out_file } => {
            let cfg = common.load()?;
            let values: Result<Vec<f64>, _> =
                theta.split(',').map(|s| s.trim().parse::<f64>()).collect();
            let values =
                values.map_err(|_| Error::Config(format!("could not parse theta '{theta}'")))?;
            cmd_render(&cfg, &values, &out_file)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
