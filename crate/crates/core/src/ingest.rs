//! Fully censused stem maps: loading, species filtering and true densities.
//!
//! Stem files are CSV with a mandatory `species,x,y` header. The study window
//! always comes from a separate descriptor, never from the data extent.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::simulate::{PointPattern, SimError, StudyWindow};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("stem file header must be species,x,y, found {0}")]
    Header(String),
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("unknown species '{0}'")]
    UnknownSpecies(String),
    #[error(transparent)]
    Window(#[from] SimError),
}

pub type Result<T> = std::result::Result<T, IngestError>;

#[derive(Debug, Clone, PartialEq)]
pub struct StemRecord {
    pub species: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StemMap {
    pub records: Vec<StemRecord>,
    pub window: StudyWindow,
}

/// How rows that fail validation are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoadMode {
    /// The first bad row aborts loading.
    #[default]
    Strict,
    /// Bad rows are dropped and counted.
    Lenient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadReport {
    pub map: StemMap,
    pub dropped: usize,
    pub warnings: Vec<String>,
}

fn parse_row(record: &csv::StringRecord, window: &StudyWindow) -> std::result::Result<StemRecord, String> {
    if record.len() != 3 {
        return Err(format!("expected 3 fields, found {}", record.len()));
    }
    let species = record[0].to_string();
    if species.is_empty() {
        return Err("empty species code".into());
    }
    let coord = |s: &str, axis: &str| {
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("{axis} '{s}' is not a finite number"))
    };
    let x = coord(&record[1], "x")?;
    let y = coord(&record[2], "y")?;
    if !window.contains(x, y) {
        return Err(format!("stem at ({x}, {y}) lies outside the window"));
    }
    Ok(StemRecord { species, x, y })
}

pub fn read_stem_map<R: Read>(reader: R, window: StudyWindow, mode: LoadMode) -> Result<LoadReport> {
    window.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if headers != ["species", "x", "y"] {
        return Err(IngestError::Header(headers.join(",")));
    }
    let mut records = Vec::new();
    let mut dropped = 0;
    let mut warnings = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        match parse_row(&record, &window) {
            Ok(r) => records.push(r),
            Err(message) => match mode {
                LoadMode::Strict => return Err(IngestError::Row { line, message }),
                LoadMode::Lenient => {
                    dropped += 1;
                    warnings.push(format!("line {line}: {message}"));
                }
            },
        }
    }
    if records.is_empty() && dropped == 0 {
        warnings.push("stem file has no records".into());
    }
    Ok(LoadReport {
        map: StemMap { records, window },
        dropped,
        warnings,
    })
}

pub fn load_stem_map(path: &Path, window: StudyWindow, mode: LoadMode) -> Result<LoadReport> {
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_stem_map(BufReader::new(file), window, mode)
}

pub fn write_stem_map<W: Write>(map: &StemMap, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["species", "x", "y"])?;
    for r in &map.records {
        wtr.write_record([r.species.clone(), r.x.to_string(), r.y.to_string()])?;
    }
    wtr.flush().map_err(|e| IngestError::Csv(e.into()))?;
    Ok(())
}

impl StemMap {
    pub fn species_counts(&self) -> BTreeMap<&str, usize> {
        let mut counts = BTreeMap::new();
        for r in &self.records {
            *counts.entry(r.species.as_str()).or_insert(0) += 1;
        }
        counts
    }
}

/// Species with at least `min_count` stems, sorted by code.
pub fn filter_abundant(map: &StemMap, min_count: usize) -> Vec<String> {
    map.species_counts()
        .into_iter()
        .filter(|&(_, n)| n >= min_count.max(1))
        .map(|(code, _)| code.to_string())
        .collect()
}

pub fn species_pattern(map: &StemMap, code: &str) -> Result<PointPattern> {
    let points: Vec<[f64; 2]> = map
        .records
        .iter()
        .filter(|r| r.species == code)
        .map(|r| [r.x, r.y])
        .collect();
    if points.is_empty() {
        return Err(IngestError::UnknownSpecies(code.to_string()));
    }
    Ok(PointPattern::new(points, map.window)?)
}

/// Number of points divided by the window area.
pub fn true_density(pattern: &PointPattern) -> f64 {
    pattern.len() as f64 / pattern.window().area()
}
