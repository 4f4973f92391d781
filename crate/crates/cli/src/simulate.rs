use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::Args;
use pcqm::estimators::write_sample_csv;
use pcqm::evaluate::ProcessSpec;
use pcqm::ingest::true_density;
use pcqm::simulate::{derive_seed, gen_poisson, gen_thomas, lhs_focal_points, pcqm_sample, StudyWindow};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, CliError, Result};
use crate::{read_json_config, single, write_json_file, DesignFlags};

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Simulation config JSON, or a manifest from an earlier run.
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "pcqm-simulate")]
    out: PathBuf,
    #[command(flatten)]
    design: DesignFlags,
    /// Validate the config and exit without writing anything.
    #[arg(long)]
    dry_run: bool,
}

fn default_n() -> usize {
    120
}

fn default_q() -> u32 {
    4
}

/// One pattern realization and one survey of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub process: ProcessSpec,
    pub window: StudyWindow,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_q")]
    pub q: u32,
    pub ell: u32,
    pub radius: f64,
    #[serde(default)]
    pub buffer: Option<f64>,
    pub seed: u64,
}

#[derive(Serialize)]
struct SimulateManifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a SimulateConfig,
    intensity: f64,
    realized_density: f64,
    n_points: usize,
    n_censored: usize,
    censored_rate: f64,
    outputs: Vec<String>,
}

pub fn run(args: SimulateArgs) -> Result<()> {
    let mut cfg: SimulateConfig = read_json_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(ell) = single(&args.design.ell, "ell")? {
        cfg.ell = ell;
    }
    if let Some(q) = single(&args.design.q, "q")? {
        cfg.q = q;
    }
    if let Some(radius) = single(&args.design.radius, "radius")? {
        cfg.radius = radius;
    }
    let intensity = cfg
        .process
        .nominal_intensity()
        .ok_or_else(|| CliError::Config("simulate supports csr and thomas processes only".into()))?;
    let design = pcqm::simulate::SurveyDesign {
        n: cfg.n,
        q: cfg.q,
        ell: cfg.ell,
        radius: cfg.radius,
        buffer: cfg.buffer.unwrap_or(cfg.radius + 0.1),
        seed: cfg.seed,
    };
    cfg.window.validate()?;
    design.validate(&cfg.window)?;
    if args.dry_run {
        println!("config ok: 1 pattern, {} focal points", cfg.n);
        return Ok(());
    }

    let pattern_seed = derive_seed(cfg.seed, &[0]);
    let pattern = match cfg.process {
        ProcessSpec::Csr { lambda } => gen_poisson(lambda, &cfg.window, pattern_seed)?,
        ProcessSpec::Thomas { kappa, mu, sigma } => gen_thomas(kappa, mu, sigma, &cfg.window, pattern_seed)?,
        ProcessSpec::StemMap { .. } => unreachable!("rejected above"),
    };
    let focals = lhs_focal_points(&design, &cfg.window, derive_seed(cfg.seed, &[1]))?;
    let sample = pcqm_sample(&pattern, &focals, &design)?;

    std::fs::create_dir_all(&args.out).map_err(io_err(&args.out))?;
    let pattern_path = args.out.join("pattern.csv");
    let sidecar = pattern.save(&pattern_path)?;
    let sample_path = args.out.join("sample.csv");
    let file = File::create(&sample_path).map_err(io_err(&sample_path))?;
    write_sample_csv(&sample, BufWriter::new(file))?;

    let name = |p: &PathBuf| p.file_name().unwrap_or_default().to_string_lossy().into_owned();
    let manifest = SimulateManifest {
        tool: "pcqm",
        version: env!("CARGO_PKG_VERSION"),
        command: "simulate",
        config: &cfg,
        intensity,
        realized_density: true_density(&pattern),
        n_points: pattern.len(),
        n_censored: sample.n0(),
        censored_rate: sample.p0(),
        outputs: vec![name(&pattern_path), name(&sidecar), name(&sample_path)],
    };
    write_json_file(&args.out.join("manifest.json"), &manifest)?;
    println!(
        "{} points, {} of {} sectors censored; wrote {}",
        pattern.len(),
        sample.n0(),
        sample.nq(),
        args.out.display()
    );
    Ok(())
}
