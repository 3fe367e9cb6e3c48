use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ytlab::harness::{
    list_experiments, run_experiment, verify, ExperimentConfig, OutputFormat,
};
use ytlab::model::{DistSpec, GrowthSchedule};
use ytlab::Error;

#[derive(Parser)]
#[command(name = "ytlab", about = "Monte Carlo laboratory for random word shapes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named experiment and write raw samples plus a summary.
    Run(RunArgs),
    /// List the available experiments.
    List,
    /// Recompute a summary from its raw CSV and check the two agree.
    Verify { summary: PathBuf, raw_csv: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    experiment: String,
    /// Word length.
    #[arg(long)]
    n: Option<usize>,
    /// Explicit alphabet size (mutually exclusive with --schedule).
    #[arg(long, conflicts_with = "schedule")]
    m: Option<usize>,
    /// Growth schedule: inline JSON or a path to a JSON file.
    #[arg(long)]
    schedule: Option<String>,
    /// Letter distribution: inline JSON or a path to a JSON file.
    #[arg(long)]
    dist: Option<String>,
    /// Monte Carlo sample count.
    #[arg(long)]
    samples: Option<usize>,
    /// Number of marginals for vector statistics.
    #[arg(long)]
    r: Option<usize>,
    /// Chain length for the percolation experiments.
    #[arg(long)]
    k: Option<usize>,
    /// Maximal letter probability.
    #[arg(long)]
    pmax: Option<f64>,
    /// Matrix size for the spectrum reference ensemble.
    #[arg(long)]
    mref: Option<usize>,
    /// Reference ensemble sample count.
    #[arg(long)]
    refsamples: Option<usize>,
    /// Time steps per unit of Brownian horizon.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Raw output format.
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Also write a histogram of the primary statistic.
    #[arg(long)]
    svg: bool,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

fn load_json_arg<T: serde::de::DeserializeOwned>(arg: &str, what: &str) -> Result<T, Error> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg)?
    };
    serde_json::from_str(&text)
        .map_err(|e| Error::InvalidInput(format!("could not parse {what}: {e}")))
}

fn run(args: RunArgs) -> Result<bool, Error> {
    let mut config = ExperimentConfig::new(&args.experiment)?;
    if let Some(n) = args.n {
        config.n = n;
    }
    config.m = args.m.or(config.m);
    if let Some(text) = &args.schedule {
        let schedule: GrowthSchedule = load_json_arg(text, "schedule")?;
        config.schedule = Some(schedule);
    }
    if let Some(text) = &args.dist {
        let dist: DistSpec = load_json_arg(text, "dist")?;
        config.dist = Some(dist);
    }
    if let Some(samples) = args.samples {
        config.samples = samples;
    }
    if let Some(r) = args.r {
        config.r = r;
    }
    if let Some(k) = args.k {
        config.k = k;
    }
    if let Some(pmax) = args.pmax {
        config.p_max = pmax;
    }
    if let Some(mref) = args.mref {
        config.m_ref = mref;
    }
    if let Some(refsamples) = args.refsamples {
        config.ref_samples = refsamples;
    }
    if let Some(steps) = args.steps {
        config.steps_per_unit = steps;
    }
    config.seed = args.seed;
    config.out_dir = args.out;
    config.format = match args.format {
        FormatArg::Csv => OutputFormat::Csv,
        FormatArg::Json => OutputFormat::Json,
    };
    config.svg = args.svg;

    let outcome = run_experiment(&config)?;
    println!("wrote {}", outcome.raw_path.display());
    println!("wrote {}", outcome.summary_path.display());
    if let Some(svg) = &outcome.svg_path {
        println!("wrote {}", svg.display());
    }
    for entry in &outcome.summary.ks {
        println!(
            "ks {}: D = {:.5}, p = {:.4} (n1 = {}, n2 = {})",
            entry.statistic, entry.d, entry.p, entry.n1, entry.n2
        );
    }
    for failure in &outcome.failures {
        eprintln!("threshold failure: {failure}");
    }
    Ok(outcome.failures.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => match run(args) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(4),
            Err(e) => {
                eprintln!("error: {e}");
                match e {
                    Error::Integrity(_) => ExitCode::from(3),
                    _ => ExitCode::from(2),
                }
            }
        },
        Command::List => {
            for info in list_experiments() {
                println!("{}", info.name);
                println!("  parameters: {}", info.parameters);
                println!("  claim: {}", info.claim);
                println!("  default KS threshold: {}", info.default_threshold);
            }
            ExitCode::SUCCESS
        }
        Command::Verify { summary, raw_csv } => match verify(&summary, &raw_csv) {
            Ok(report) => {
                println!(
                    "verified {} ks entries and {} quantile groups for `{}`",
                    report.ks.len(),
                    report.quantiles.len(),
                    report.experiment
                );
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                match e {
                    Error::Integrity(_) => ExitCode::from(3),
                    _ => ExitCode::from(2),
                }
            }
        },
    }
}
