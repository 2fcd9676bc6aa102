use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use crowdwise::aggregate::AggregatorKind;
use crowdwise::dataset::FileFormat;
use crowdwise::harness::{self, HarnessError, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "crowdwise", version, about = "Crowd aggregation and counterfactual bias experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus, responses and profiles from [simulate].
    Simulate(Common),
    /// Validate the [data] inputs and write a summary.
    Ingest(Common),
    /// Query a chat endpoint for every headline per [elicit].
    Elicit(Common),
    /// Out-of-fold bias report rows and the Q-matrix.
    Evaluate(Common),
    /// Group-size sweep with bootstrap intervals.
    Sweep(Common),
    /// Bias rows, Q-matrix and size sweep together.
    Report(Common),
}

#[derive(Args)]
struct Common {
    /// Run-config file (TOML).
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    folds: Option<usize>,
    /// Comma-separated group sizes, or a range like `2..16`.
    #[arg(long, value_parser = parse_sizes)]
    sizes: Option<SizeList>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Comma-separated: simple_average, weighted_average, expertise_tree.
    #[arg(long, value_delimiter = ',')]
    aggregators: Option<Vec<AggregatorKind>>,
    /// csv or json.
    #[arg(long)]
    format: Option<FileFormat>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Clone)]
struct SizeList(Vec<usize>);

fn parse_sizes(s: &str) -> Result<SizeList, String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
        if a > b {
            return Err(format!("empty range {s}"));
        }
        return Ok(SizeList((a..=b).collect()));
    }
    s.split(',').map(num).collect::<Result<_, _>>().map(SizeList)
}

impl Common {
    fn load(&self) -> Result<RunConfig, HarnessError> {
        let mut config = RunConfig::load(&self.config)?;
        config.apply(&Overrides {
            seed: self.seed,
            folds: self.folds,
            sizes: self.sizes.clone().map(|s| s.0),
            repeats: self.repeats,
            aggregators: self.aggregators.clone(),
            format: self.format,
            out_dir: self.out_dir.clone(),
        });
        Ok(config)
    }
}

fn elicit(config: &RunConfig) -> Result<Vec<PathBuf>, HarnessError> {
    #[cfg(feature = "http")]
    {
        let endpoint = harness::http_endpoint(config)?;
        harness::run_elicit(config, &endpoint)
    }
    #[cfg(not(feature = "http"))]
    {
        let _ = config;
        Err(HarnessError::Config("built without the `http` feature".into()))
    }
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, HarnessError> {
    match cli.command {
        Command::Simulate(c) => harness::run_simulate(&c.load()?),
        Command::Ingest(c) => harness::run_ingest(&c.load()?),
        Command::Elicit(c) => elicit(&c.load()?),
        Command::Evaluate(c) => harness::run_evaluate(&c.load()?),
        Command::Sweep(c) => harness::run_sweep(&c.load()?),
        Command::Report(c) => harness::run_report(&c.load()?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.class());
            ExitCode::FAILURE
        }
    }
}
