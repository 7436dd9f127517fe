//! Command-line Monte Carlo simulator for the two-stage IRS cascaded channel
//! estimator.

use std::path::PathBuf;

use anyhow::bail;
use clap::{Args, Parser, Subcommand};

use irs_cascade_sim::config::{preset, EstimatorKind, SimConfig};
use irs_cascade_sim::emit::{emit_results, OutputFormat};
use irs_cascade_sim::metrics::MetricsRecord;
use irs_cascade_sim::runner::run_monte_carlo;

#[derive(Parser)]
#[command(
    name = "irs-cascade-sim",
    about = "Monte Carlo sweeps for two-stage IRS cascaded channel estimation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep and write the aggregated metrics.
    Run(RunArgs),
    /// Print the effective configuration as TOML and exit.
    ShowConfig(SourceArgs),
}

#[derive(Args)]
struct SourceArgs {
    /// Built-in configuration: fig5, fig6 or fig7.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Configuration file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
}

impl SourceArgs {
    fn load(&self) -> anyhow::Result<SimConfig> {
        match (&self.preset, &self.config) {
            (Some(name), None) => preset(name),
            (None, Some(path)) => SimConfig::load(path),
            (None, None) => bail!("pass either --preset or --config"),
            (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Trials per sweep point.
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated PNR grid in dB, e.g. 0,10,20,30.
    #[arg(long, value_delimiter = ',')]
    pnr: Option<Vec<f64>>,
    /// Comma-separated estimators: proposed, proposed_no_fbss, ls.
    #[arg(long, value_delimiter = ',')]
    estimators: Option<Vec<EstimatorKind>>,
    /// Output file path (default: results.csv / results.json).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv or json.
    #[arg(long, default_value = "csv")]
    format: OutputFormatArg,
    /// Suppress the summary table.
    #[arg(long)]
    quiet: bool,
}

#[derive(Clone, Copy)]
struct OutputFormatArg(OutputFormat);

impl std::str::FromStr for OutputFormatArg {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> anyhow::Result<Self> {
        Ok(Self(s.parse()?))
    }
}

fn apply_overrides(config: &mut SimConfig, args: &RunArgs) {
    if let Some(seed) = args.seed {
        config.sweep.seed = seed;
    }
    if let Some(trials) = args.trials {
        config.sweep.trials = trials;
    }
    if let Some(pnr) = &args.pnr {
        config.sweep.pnr_db = pnr.clone();
    }
    if let Some(estimators) = &args.estimators {
        config.estimators = estimators.clone();
    }
}

fn summarize(config: &SimConfig, records: &[MetricsRecord]) {
    let db = |v: Option<f64>| match v {
        Some(x) if x > 0.0 => format!("{:8.2}", 10.0 * x.log10()),
        Some(_) => "    -inf".to_string(),
        None => "     n/a".to_string(),
    };
    println!(
        "training overhead: proposed T = {} channel uses, LS baseline T = {}",
        config.training_overhead(),
        config.ls_overhead()
    );
    println!(
        "{:<18} {:>7} {:>9} {:>9} {:>9} {:>9} {:>9} {:>6} {:>9}",
        "estimator", "pnr_db", "θR[dB]", "φT[dB]", "irs[dB]", "γ[dB]", "nmse[dB]", "fail", "ms/trial"
    );
    for r in records {
        println!(
            "{:<18} {:>7.1} {} {} {} {} {} {:>6.2} {:>9.1}",
            r.estimator,
            r.pnr_db,
            db(r.mse_theta_r),
            db(r.mse_phi_t),
            db(r.mse_irs),
            db(r.mse_gamma),
            db(r.nmse_h),
            r.failure_rate,
            r.mean_runtime_ms,
        );
    }
}

fn run(args: &RunArgs) -> anyhow::Result<()> {
    let mut config = args.source.load()?;
    apply_overrides(&mut config, args);
    config.validate()?;
    let records = run_monte_carlo(&config)?;
    let OutputFormatArg(format) = args.format;
    let out = args.out.clone().unwrap_or_else(|| {
        PathBuf::from(match format {
            OutputFormat::Csv => "results.csv",
            OutputFormat::Json => "results.json",
        })
    });
    emit_results(&records, format, &out)?;
    if !args.quiet {
        summarize(&config, &records);
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run(&args),
        Command::ShowConfig(source) => {
            print!("{}", source.load()?.to_toml());
            Ok(())
        }
    }
}
