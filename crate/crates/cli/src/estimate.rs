use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;

use clap::Args;
use pcqm::estimators::{estimate, read_sample_csv, EstimatorError, EstimatorId};

use crate::error::{io_err, CliError, Result};
use crate::{single, DesignFlags};

#[derive(Args, Debug)]
pub struct EstimateArgs {
    /// Distance sample CSV (point_id,sector_id,distance,censored).
    #[arg(long)]
    input: PathBuf,
    /// Estimator name, repeatable; `all` picks the censored set for censored
    /// files and the complete set otherwise.
    #[arg(long, value_delimiter = ',', default_value = "all")]
    estimator: Vec<String>,
    #[command(flatten)]
    design: DesignFlags,
    /// Initial density for the imputation-based censored estimators.
    #[arg(long)]
    lambda_init: Option<f64>,
    /// Write the table here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Selection {
    All,
    Named(Vec<EstimatorId>),
}

fn parse_selection(names: &[String]) -> Result<Selection> {
    if names.iter().any(|n| n.trim().eq_ignore_ascii_case("all")) {
        if names.len() > 1 {
            return Err(CliError::Config("`all` cannot be combined with other estimators".into()));
        }
        return Ok(Selection::All);
    }
    names
        .iter()
        .map(|n| n.parse::<EstimatorId>().map_err(CliError::Config))
        .collect::<Result<Vec<_>>>()
        .map(Selection::Named)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn run(args: EstimateArgs) -> Result<()> {
    let selection = parse_selection(&args.estimator)?;
    let ell = single(&args.design.ell, "ell")?.unwrap_or(1);
    let q = single(&args.design.q, "q")?;
    let radius = single(&args.design.radius, "radius")?.unwrap_or(f64::INFINITY);
    let file = File::open(&args.input).map_err(io_err(&args.input))?;
    let sample = read_sample_csv::<f64, _>(BufReader::new(file), q, ell, radius)?;
    if sample.n0() == sample.nq() {
        return Err(EstimatorError::AllCensored { what: "estimate" }.into());
    }
    let (ids, tolerant) = match selection {
        Selection::All if sample.n0() > 0 => (EstimatorId::CENSORED_SET.to_vec(), true),
        Selection::All => (EstimatorId::COMPLETE_SET.to_vec(), true),
        Selection::Named(ids) => (ids, false),
    };

    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["estimator", "lambda_hat", "k_hat", "valid", "message"])?;
    let mut first_error: Option<EstimatorError> = None;
    for id in ids {
        match estimate(id, &sample, args.lambda_init) {
            Ok(est) => wtr.write_record([
                id.to_string(),
                est.lambda_hat.to_string(),
                opt(est.k_hat),
                (est.valid as u8).to_string(),
                est.warnings.join("; "),
            ])?,
            Err(e) => {
                wtr.write_record([id.to_string(), String::new(), String::new(), "0".into(), e.to_string()])?;
                if !tolerant && first_error.is_none() {
                    first_error = Some(e);
                }
            }
        }
    }
    let bytes = wtr.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
    match &args.out {
        Some(path) => std::fs::write(path, &bytes).map_err(io_err(path))?,
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(io_err(std::path::Path::new("<stdout>")))?,
    }
    match first_error {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}
