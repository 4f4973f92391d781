use std::collections::BTreeMap;
use std::io::{Read, Write};

use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("invalid sample: {0}")]
    Invalid(String),
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One sector of one focal point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation<T> {
    /// Distance to the ℓ-th nearest individual, 0 < r ≤ C.
    Observed(T),
    /// Fewer than ℓ individuals within the search radius.
    Censored,
}

impl<T: Copy> Observation<T> {
    pub fn distance(&self) -> Option<T> {
        match *self {
            Observation::Observed(r) => Some(r),
            Observation::Censored => None,
        }
    }
}

/// A PCQM sample: `n` focal points × `q` sectors, each holding the ℓ-th
/// neighbor distance or a censoring marker, with search radius C
/// (infinite for complete data).
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceSample<T> {
    n: usize,
    q: u32,
    ell: u32,
    radius: T,
    cells: Vec<Observation<T>>,
}

impl<T: Scalar> DistanceSample<T> {
    /// Builds a sample from cells laid out point by point (`q` consecutive
    /// cells per focal point).
    pub fn new(q: u32, ell: u32, radius: T, cells: Vec<Observation<T>>) -> Result<Self, SampleError> {
        if q == 0 || ell == 0 {
            return Err(SampleError::Invalid("q and ell must be >= 1".into()));
        }
        if !(radius > T::zero()) {
            return Err(SampleError::Invalid(format!(
                "search radius must be positive, got {radius}"
            )));
        }
        let qs = q as usize;
        if cells.is_empty() || !cells.len().is_multiple_of(qs) {
            return Err(SampleError::Invalid(format!(
                "{} cells do not form whole focal points of {q} sectors",
                cells.len()
            )));
        }
        for (i, cell) in cells.iter().enumerate() {
            match *cell {
                Observation::Observed(r) => {
                    if !(r > T::zero() && r.is_finite() && r <= radius) {
                        return Err(SampleError::Invalid(format!(
                            "cell {i} (point {}, sector {}): distance {r} outside (0, {radius}]",
                            i / qs,
                            i % qs
                        )));
                    }
                }
                Observation::Censored => {
                    if radius.is_infinite() {
                        return Err(SampleError::Invalid(format!(
                            "cell {i} is censored but the search radius is infinite"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            n: cells.len() / qs,
            q,
            ell,
            radius,
            cells,
        })
    }

    /// Censors every distance beyond `radius`.
    pub fn from_distances(distances: &[T], q: u32, ell: u32, radius: T) -> Result<Self, SampleError> {
        let cells = distances
            .iter()
            .map(|&r| {
                if r > radius {
                    Observation::Censored
                } else {
                    Observation::Observed(r)
                }
            })
            .collect();
        Self::new(q, ell, radius, cells)
    }

    /// Uncensored sample (C = ∞).
    pub fn complete(distances: &[T], q: u32, ell: u32) -> Result<Self, SampleError> {
        Self::from_distances(distances, q, ell, T::infinity())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn cells(&self) -> &[Observation<T>] {
        &self.cells
    }

    /// Sectors of focal point `i`.
    pub fn point(&self, i: usize) -> &[Observation<T>] {
        let qs = self.q as usize;
        &self.cells[i * qs..(i + 1) * qs]
    }

    pub fn points(&self) -> impl Iterator<Item = &[Observation<T>]> {
        self.cells.chunks(self.q as usize)
    }

    pub fn nq(&self) -> usize {
        self.cells.len()
    }

    /// Number of censored sectors, n₀.
    pub fn n0(&self) -> usize {
        self.cells
            .iter()
            .filter(|c| matches!(c, Observation::Censored))
            .count()
    }

    /// Censored fraction p₀ = n₀ / (nq).
    pub fn p0(&self) -> T {
        T::from_count(self.n0()) / T::from_count(self.nq())
    }

    pub fn observed(&self) -> impl Iterator<Item = T> + '_ {
        self.cells.iter().filter_map(|c| c.distance())
    }

    /// Σ r^u over observed distances.
    pub fn power_sum(&self, u: T) -> T {
        if u == T::one() {
            self.observed().fold(T::zero(), |acc, r| acc + r)
        } else if u == T::lit(2.0) {
            self.observed().fold(T::zero(), |acc, r| acc + r * r)
        } else if u == -T::one() {
            self.observed().fold(T::zero(), |acc, r| acc + r.recip())
        } else if u == -T::lit(2.0) {
            self.observed().fold(T::zero(), |acc, r| acc + (r * r).recip())
        } else {
            self.observed().fold(T::zero(), |acc, r| acc + r.powf(u))
        }
    }

    /// The same sample with every distance and the radius multiplied by `c`.
    pub fn scaled(&self, c: T) -> Result<Self, SampleError> {
        let cells = self
            .cells
            .iter()
            .map(|cell| match *cell {
                Observation::Observed(r) => Observation::Observed(r * c),
                Observation::Censored => Observation::Censored,
            })
            .collect();
        Self::new(self.q, self.ell, self.radius * c, cells)
    }
}

/// Reads the `point_id,sector_id,distance,censored` CSV layout. Point and
/// sector ids are nonnegative integers; points are ordered by id and every
/// point must list the same `q` sectors. With `q = None` the sector count is
/// taken from the file.
pub fn read_sample_csv<T: Scalar, R: Read>(
    reader: R,
    q: Option<u32>,
    ell: u32,
    radius: T,
) -> Result<DistanceSample<T>, SampleError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let expected = ["point_id", "sector_id", "distance", "censored"];
    let found: Vec<&str> = headers.iter().collect();
    if found != expected {
        return Err(SampleError::Invalid(format!(
            "header must be {}, found {}",
            expected.join(","),
            found.join(",")
        )));
    }

    let mut points: BTreeMap<u64, BTreeMap<u64, Observation<T>>> = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row_err = |message: String| SampleError::Row { line, message };
        let parse_id = |field: &str, name: &str| {
            field
                .parse::<u64>()
                .map_err(|_| row_err(format!("{name} '{field}' is not a nonnegative integer")))
        };
        let point = parse_id(&record[0], "point_id")?;
        let sector = parse_id(&record[1], "sector_id")?;
        let cell = match &record[3] {
            "0" => {
                let d: f64 = record[2]
                    .parse()
                    .map_err(|_| row_err(format!("distance '{}' is not a number", &record[2])))?;
                let d = T::from_f64(d).ok_or_else(|| row_err(format!("distance {d} out of range")))?;
                Observation::Observed(d)
            }
            "1" => {
                if !record[2].is_empty() {
                    return Err(row_err("censored rows must leave distance empty".into()));
                }
                Observation::Censored
            }
            other => return Err(row_err(format!("censored flag must be 0 or 1, got '{other}'"))),
        };
        if points.entry(point).or_default().insert(sector, cell).is_some() {
            return Err(row_err(format!("duplicate sector {sector} for point {point}")));
        }
    }
    if points.is_empty() {
        return Err(SampleError::Invalid("sample file has no rows".into()));
    }
    let q = match q {
        Some(q) => q,
        None => points.values().next().map(|s| s.len() as u32).unwrap_or(0),
    };
    let mut cells = Vec::with_capacity(points.len() * q as usize);
    for (id, sectors) in &points {
        if sectors.len() != q as usize {
            return Err(SampleError::Invalid(format!(
                "point {id} has {} sectors, expected {q}",
                sectors.len()
            )));
        }
        cells.extend(sectors.values().copied());
    }
    DistanceSample::new(q, ell, radius, cells)
}

/// Writes the CSV layout read by [`read_sample_csv`], with 1-based ids.
pub fn write_sample_csv<T: Scalar, W: Write>(
    sample: &DistanceSample<T>,
    writer: W,
) -> Result<(), SampleError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["point_id", "sector_id", "distance", "censored"])?;
    for (i, point) in sample.points().enumerate() {
        for (j, cell) in point.iter().enumerate() {
            let (dist, flag) = match cell {
                Observation::Observed(r) => (format!("{r}"), "0".to_string()),
                Observation::Censored => (String::new(), "1".to_string()),
            };
            wtr.write_record([(i + 1).to_string(), (j + 1).to_string(), dist, flag])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_validates_cells() {
        assert!(DistanceSample::from_distances(&[1.0, 2.0, 3.0], 2, 1, 10.0).is_err());
        assert!(DistanceSample::from_distances(&[1.0, 0.0], 2, 1, 10.0).is_err());
        assert!(DistanceSample::new(2, 1, f64::INFINITY, vec![Observation::Censored, Observation::Observed(1.0)]).is_err());
        let s = DistanceSample::from_distances(&[1.0, 12.0, 3.0, 10.0], 2, 1, 10.0).unwrap();
        assert_eq!(s.n(), 2);
        assert_eq!(s.n0(), 1);
        assert_eq!(s.nq(), 4);
        assert_eq!(s.p0(), 0.25);
        // Exactly C is observed.
        assert_eq!(s.point(1)[1], Observation::Observed(10.0));
    }

    #[test]
    fn csv_round_trip() {
        let s = DistanceSample::from_distances(&[1.5, 12.0, 3.25, 9.0, 0.5, 11.0], 3, 2, 10.0).unwrap();
        let mut buf = Vec::new();
        write_sample_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("point_id,sector_id,distance,censored\n1,1,1.5,0\n1,2,,1\n"));
        let back: DistanceSample<f64> = read_sample_csv(&buf[..], None, 2, 10.0).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn csv_errors_name_the_line() {
        let text = "point_id,sector_id,distance,censored\n1,1,2.0,0\n1,2,abc,0\n";
        let err = read_sample_csv::<f64, _>(text.as_bytes(), Some(2), 1, 10.0).unwrap_err();
        assert!(matches!(err, SampleError::Row { line: 3, .. }), "{err}");
        let text = "id,sector,distance,censored\n";
        assert!(read_sample_csv::<f64, _>(text.as_bytes(), None, 1, 10.0).is_err());
        let text = "point_id,sector_id,distance,censored\n1,1,2.0,0\n2,1,2.0,0\n2,2,1.0,0\n";
        assert!(read_sample_csv::<f64, _>(text.as_bytes(), Some(2), 1, 10.0).is_err());
    }
}
