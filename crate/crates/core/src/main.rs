use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use countgof::bootstrap::{bootstrap_test, TestConfig, DEFAULT_REPLICATES};
use countgof::estimate::fit;
use countgof::mc::{emit_power_curve, run_experiment, write_summary, MCConfig};
use countgof::models::{simulate, CountSeries, InnovationSpec, ModelSpec, DEFAULT_BURN_IN};
use countgof::pgf::NullFamily;
use countgof::statistic::{Route, WeightSpec};
use countgof::Error;

const EXIT_USAGE: u8 = 2;
const EXIT_DEGENERATE: u8 = 3;

/// PGF-based goodness-of-fit tests for count time series.
#[derive(Parser)]
#[command(name = "countgof", version)]
struct Cli {
    /// Worker threads for bootstrap and Monte Carlo loops (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a series and write it as single-column CSV.
    Simulate(SimulateArgs),
    /// Fit a Poisson null model by conditional least squares; prints JSON.
    Fit {
        /// Null family to fit.
        #[arg(long, value_parser = NullFamily::from_str)]
        model: NullFamily,
        /// CSV file with one count per line.
        input: PathBuf,
    },
    /// Run the bootstrap goodness-of-fit test; prints JSON.
    Gof(GofArgs),
    /// Run a Monte Carlo size/power experiment from a TOML config.
    Mc {
        #[arg(long)]
        config: PathBuf,
        /// Rejection-rate CSV (`T,a,alpha,rejection_rate,se`).
        #[arg(long)]
        out: PathBuf,
        /// Optional JSON summary with p-values, failures and timing.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelKind {
    Inar1,
    Inar2,
    Inarch1,
    Ingarch11,
    Inarch1LevelShift,
}

#[derive(Clone, Copy, ValueEnum)]
enum InnovationKind {
    Poisson,
    #[value(alias = "negbin")]
    Negbinomial,
    PoissonMixture,
    DiracZero,
}

#[derive(Args)]
struct SimulateArgs {
    /// Model given on the command line.
    #[arg(long, required_unless_present = "config")]
    model: Option<ModelKind>,
    /// TOML file holding a model specification instead of flags.
    #[arg(long, conflicts_with = "model")]
    config: Option<PathBuf>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    p1: Option<f64>,
    #[arg(long)]
    p2: Option<f64>,
    /// Innovation mean (INAR models).
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    theta1: Option<f64>,
    #[arg(long)]
    theta2: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Level-shift position as a fraction of T, or the mixture weight.
    #[arg(long)]
    phi: Option<f64>,
    /// Negative binomial dispersion.
    #[arg(long)]
    r: Option<f64>,
    #[arg(long, default_value = "poisson")]
    innovation: InnovationKind,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    /// Series length.
    #[arg(long = "T")]
    t: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    burn_in: usize,
    /// Output path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GofArgs {
    /// CSV file with one count per line.
    input: PathBuf,
    #[arg(long, value_parser = NullFamily::from_str)]
    null: NullFamily,
    /// Weight exponent in w(u) = u^a.
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Bootstrap replicates.
    #[arg(long = "B", default_value_t = DEFAULT_REPLICATES)]
    b: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "auto", value_parser = Route::from_str)]
    route: Route,
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    burn_in: usize,
    /// Include the replicate statistics in the output.
    #[arg(long)]
    keep_replicates: bool,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_degenerate() || matches!(e, Error::TooManyFailures { .. }) {
            EXIT_DEGENERATE
        } else {
            EXIT_USAGE
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn need(value: Option<f64>, flag: &str) -> Result<f64, Failure> {
    value.ok_or_else(|| usage(format!("missing required flag --{flag}")))
}

fn innovation(args: &SimulateArgs) -> Result<InnovationSpec, Failure> {
    Ok(match args.innovation {
        InnovationKind::Poisson => InnovationSpec::Poisson {
            theta: need(args.theta, "theta")?,
        },
        InnovationKind::Negbinomial => InnovationSpec::NegBinomial {
            theta: need(args.theta, "theta")?,
            r: need(args.r, "r")?,
        },
        InnovationKind::PoissonMixture => InnovationSpec::PoissonMixture {
            phi: need(args.phi, "phi")?,
            lambda1: need(args.lambda1, "lambda1")?,
            lambda2: need(args.lambda2, "lambda2")?,
        },
        InnovationKind::DiracZero => InnovationSpec::DiracZeroMixture {
            phi: need(args.phi, "phi")?,
            lambda: need(args.lambda, "lambda")?,
        },
    })
}

fn model_from_flags(args: &SimulateArgs, kind: ModelKind) -> Result<ModelSpec, Failure> {
    Ok(match kind {
        ModelKind::Inar1 => ModelSpec::Inar1 {
            p: need(args.p, "p")?,
            innovation: innovation(args)?,
        },
        ModelKind::Inar2 => ModelSpec::Inar2 {
            p1: need(args.p1, "p1")?,
            p2: need(args.p2, "p2")?,
            innovation: innovation(args)?,
        },
        ModelKind::Inarch1 => ModelSpec::Inarch1 {
            theta1: need(args.theta1, "theta1")?,
            theta2: need(args.theta2, "theta2")?,
            r: args.r,
        },
        ModelKind::Ingarch11 => ModelSpec::Ingarch11 {
            theta1: need(args.theta1, "theta1")?,
            theta2: need(args.theta2, "theta2")?,
            delta: need(args.delta, "delta")?,
        },
        ModelKind::Inarch1LevelShift => ModelSpec::Inarch1LevelShift {
            theta1: need(args.theta1, "theta1")?,
            theta2: need(args.theta2, "theta2")?,
            delta: need(args.delta, "delta")?,
            phi: need(args.phi, "phi")?,
        },
    })
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), Failure> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| usage(e.to_string()))?;
    writeln!(out).map_err(|e| usage(e.to_string()))
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let model = match (&args.config, args.model) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(Error::from)?;
            ModelSpec::from_toml_str(&text)?
        }
        (None, Some(kind)) => model_from_flags(args, kind)?,
        (None, None) => return Err(usage("either --model or --config is required")),
    };
    if args.t == 0 {
        return Err(usage("--T must be at least 1"));
    }
    let series = simulate(&model, args.t, args.burn_in, args.seed)?;
    match &args.out {
        Some(path) => series.write_csv_path(path)?,
        None => series.write_csv(std::io::stdout().lock())?,
    }
    Ok(())
}

fn cmd_gof(args: &GofArgs) -> Result<(), Failure> {
    let series = CountSeries::read_csv_path(&args.input)?;
    let config = TestConfig {
        null_family: args.null,
        weight: WeightSpec::new(args.a)?,
        replicates: args.b,
        seed: args.seed,
        route: args.route,
        burn_in: args.burn_in,
        parallel: true,
        keep_replicates: args.keep_replicates,
    };
    config.validate()?;
    print_json(&bootstrap_test(&series, &config)?)
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(e.to_string()))?;
    }
    match cli.command {
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Fit { model, input } => {
            let series = CountSeries::read_csv_path(input)?;
            print_json(&fit(&series, model)?)
        }
        Command::Gof(args) => cmd_gof(&args),
        Command::Mc {
            config,
            out,
            summary,
        } => {
            let config = MCConfig::from_path(config)?;
            let result = run_experiment(&config)?;
            emit_power_curve(&result, out)?;
            if let Some(path) = summary {
                write_summary(&result, path)?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
