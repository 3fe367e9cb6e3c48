//! # Running an experiment through the library API
//!
//! The CLI is a thin wrapper over `run_experiment`. This example configures
//! a small Brownian scaling run directly, executes it, and walks the
//! resulting summary: KS entries, quantile table, and output paths.
//! Identical configuration and seed reproduce the raw CSV byte for byte.

use ytlab::harness::{run_experiment, ExperimentConfig};

fn main() -> ytlab::Result<()> {
    let mut config = ExperimentConfig::new("scaling1")?;
    config.samples = 800;
    config.steps_per_unit = 300;
    config.seed = 21;
    config.out_dir = std::env::temp_dir().join("ytlab-example");

    let outcome = run_experiment(&config)?;
    println!("raw:     {}", outcome.raw_path.display());
    println!("summary: {}", outcome.summary_path.display());
    for ks in &outcome.summary.ks {
        println!("ks {}: D = {:.4}, p = {:.3}", ks.statistic, ks.d, ks.p);
    }
    for (statistic, quants) in &outcome.summary.quantiles {
        println!("{statistic}: {quants:?}");
    }
    if outcome.failures.is_empty() {
        println!("all thresholds met");
    } else {
        for failure in &outcome.failures {
            println!("threshold failure: {failure}");
        }
    }
    Ok(())
}
