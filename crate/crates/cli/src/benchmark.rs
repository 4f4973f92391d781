use std::path::PathBuf;

use clap::Args;
use pcqm::evaluate::{read_config, PreparedBenchmark};

use crate::error::Result;
use crate::DesignFlags;

#[derive(Args, Debug)]
pub struct BenchmarkArgs {
    /// Benchmark config JSON, or a manifest from an earlier run.
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker thread cap (defaults to the available cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "pcqm-benchmark")]
    out: PathBuf,
    /// Override the estimator list.
    #[arg(long, value_delimiter = ',')]
    estimator: Vec<String>,
    #[command(flatten)]
    design: DesignFlags,
    /// Validate the config, print the cell count and exit without writing.
    #[arg(long)]
    dry_run: bool,
}

pub fn run(args: BenchmarkArgs) -> Result<()> {
    let mut cfg = read_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if !args.estimator.is_empty() {
        cfg.estimators = args.estimator.clone();
    }
    if !args.design.ell.is_empty() {
        cfg.ell = args.design.ell.clone();
    }
    if let Some(q) = crate::single(&args.design.q, "q")? {
        cfg.q = q;
    }
    if !args.design.radius.is_empty() {
        cfg.radius = args.design.radius.clone();
    }
    let threads = args
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let prepared = PreparedBenchmark::new(cfg, threads)?;
    let scenarios = prepared.scenarios().count();
    let cells = prepared.cell_count();
    if args.dry_run {
        println!(
            "config ok: {scenarios} scenarios, {cells} cells, {} estimators",
            prepared.estimators().len()
        );
        return Ok(());
    }
    let results = prepared.run(threads)?;
    let written = results.write_outputs(&args.out)?;
    println!(
        "{scenarios} scenarios, {cells} cells; wrote {} files to {}",
        written.len(),
        args.out.display()
    );
    Ok(())
}
