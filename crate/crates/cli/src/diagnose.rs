use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use pcqm::model::{asymptotic_bias_pair, delta1, NbdModel};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, CliError, Result};
use crate::{read_json_config, DesignFlags};

#[derive(Args, Debug)]
pub struct DiagnoseArgs {
    /// Grid JSON with lists `ell`, `q`, `lambda`, `k`, `radius`, `u`;
    /// defaults to the bundled subset grid.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    design: DesignFlags,
    /// Densities λ (comma-separated).
    #[arg(long, value_delimiter = ',')]
    lambda: Vec<f64>,
    /// Aggregation parameters k (comma-separated).
    #[arg(long, value_delimiter = ',')]
    k: Vec<f64>,
    /// Moment orders.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    u: Vec<f64>,
    /// Write the table here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseGrid {
    pub ell: Vec<u32>,
    pub q: Vec<u32>,
    pub lambda: Vec<f64>,
    pub k: Vec<f64>,
    pub radius: Vec<f64>,
    pub u: Vec<f64>,
}

impl Default for DiagnoseGrid {
    fn default() -> Self {
        Self {
            ell: vec![1, 2, 3],
            q: vec![4],
            lambda: vec![0.011, 0.051],
            k: vec![1.5, 2.0, 5.0, 10.0],
            radius: vec![5.0, 10.0, 20.0],
            u: vec![-1.0, 1.0, 2.0],
        }
    }
}

struct Row {
    ell: u32,
    q: u32,
    lambda: f64,
    k: f64,
    radius: f64,
    u: f64,
    outcome: std::result::Result<(f64, f64, f64, f64), String>,
}

fn evaluate_cell(ell: u32, q: u32, lambda: f64, k: f64, radius: f64, u: f64) -> std::result::Result<(f64, f64, f64, f64), String> {
    if !(k > 1.0) {
        return Err("second-moment limit requires k>1".into());
    }
    if !(k > u / 2.0) {
        return Err("expansion requires k>u/2".into());
    }
    let model = NbdModel::new(lambda, k, q, ell).map_err(|e| e.to_string())?;
    let bias = asymptotic_bias_pair(&model, u, radius).map_err(|e| e.to_string())?;
    let d1 = delta1(ell, u, lambda, q, radius).map_err(|e| e.to_string())?;
    Ok((bias.p0, bias.poisson_correction, bias.nbd_imputation, d1))
}

pub fn run(args: DiagnoseArgs) -> Result<()> {
    let mut grid = match &args.config {
        Some(path) => read_json_config::<DiagnoseGrid>(path)?,
        None => DiagnoseGrid::default(),
    };
    fn replace<T: Clone>(axis: &mut Vec<T>, flag: &[T]) {
        if !flag.is_empty() {
            *axis = flag.to_vec();
        }
    }
    replace(&mut grid.ell, &args.design.ell);
    replace(&mut grid.q, &args.design.q);
    replace(&mut grid.radius, &args.design.radius);
    replace(&mut grid.lambda, &args.lambda);
    replace(&mut grid.k, &args.k);
    replace(&mut grid.u, &args.u);
    if grid.ell.is_empty() || grid.q.is_empty() || grid.lambda.is_empty() || grid.k.is_empty()
        || grid.radius.is_empty() || grid.u.is_empty()
    {
        return Err(CliError::Config("every grid axis needs at least one value".into()));
    }

    let mut rows = Vec::new();
    for &ell in &grid.ell {
        for &q in &grid.q {
            for &lambda in &grid.lambda {
                for &k in &grid.k {
                    for &radius in &grid.radius {
                        for &u in &grid.u {
                            let outcome = evaluate_cell(ell, q, lambda, k, radius, u);
                            rows.push(Row { ell, q, lambda, k, radius, u, outcome });
                        }
                    }
                }
            }
        }
    }

    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record([
        "ell", "q", "lambda", "k", "radius", "u", "p0", "bias_poisson", "bias_imputation", "delta1",
        "verdict", "note",
    ])?;
    let (mut dominated, mut failed, mut skipped) = (0, 0, 0);
    for r in &rows {
        let mut fields = vec![
            r.ell.to_string(),
            r.q.to_string(),
            r.lambda.to_string(),
            r.k.to_string(),
            r.radius.to_string(),
            r.u.to_string(),
        ];
        match &r.outcome {
            Ok((p0, bp, bi, d1)) => {
                let verdict = if *bp == 0.0 && *bi == 0.0 {
                    "no-bias"
                } else if bi.abs() < bp.abs() {
                    dominated += 1;
                    "imputation-smaller"
                } else {
                    failed += 1;
                    "poisson-smaller"
                };
                fields.extend([p0.to_string(), bp.to_string(), bi.to_string(), d1.to_string(), verdict.into(), String::new()]);
            }
            Err(note) => {
                skipped += 1;
                fields.extend([String::new(), String::new(), String::new(), String::new(), "skipped".into(), note.clone()]);
            }
        }
        wtr.write_record(&fields)?;
    }
    let bytes = wtr.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
    match &args.out {
        Some(path) => std::fs::write(path, &bytes).map_err(io_err(path))?,
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(io_err(std::path::Path::new("<stdout>")))?,
    }
    eprintln!(
        "{} cells: {dominated} with smaller imputation bias, {failed} without, {skipped} skipped",
        rows.len()
    );
    Ok(())
}
