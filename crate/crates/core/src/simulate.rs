//! Point-process simulation and PCQM field sampling.
//!
//! Everything here is `f64`. Randomness comes from ChaCha8 streams: a seed
//! selects the key and a stream index selects an independent keystream, so a
//! replicate's draws depend only on `(seed, index)` and never on scheduling.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimators::{DistanceSample, Observation, SampleError};
use crate::model::{CsrModel, NbdModel};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, SimError>;

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SimError + '_ {
    move |source| SimError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Mixes a seed with a sequence of labels (SplitMix64 finalizer), for
/// deriving child seeds from a master seed.
pub fn derive_seed(seed: u64, labels: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    labels.iter().fold(mix(seed), |acc, &l| mix(acc ^ mix(l)))
}

/// ChaCha8 generator keyed by `seed`, positioned on keystream `stream`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

// Stream indices that separate the uses of one seed.
const STREAM_POISSON: u64 = 1;
const STREAM_THOMAS: u64 = 2;
const STREAM_LHS: u64 = 3;
const STREAM_NBD: u64 = 4;
const STREAM_CSR: u64 = 5;

/// Axis-aligned rectangular study area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyWindow {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl StudyWindow {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        let w = Self {
            x_min,
            y_min,
            x_max,
            y_max,
        };
        w.validate()?;
        Ok(w)
    }

    /// `[0, side] × [0, side]`.
    pub fn square(side: f64) -> Result<Self> {
        Self::new(0.0, 0.0, side, side)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.y_min, self.x_max, self.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || !(self.x_max > self.x_min) || !(self.y_max > self.y_min) {
            return Err(SimError::Config(format!(
                "window must satisfy x_max > x_min and y_max > y_min with finite bounds, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Closed-rectangle membership.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    /// The window grown by `margin` on every side (shrunk if negative).
    pub fn expanded(&self, margin: f64) -> Self {
        Self {
            x_min: self.x_min - margin,
            y_min: self.y_min - margin,
            x_max: self.x_max + margin,
            y_max: self.y_max + margin,
        }
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(io_err(path))?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n").map_err(io_err(path))?;
        w.flush().map_err(io_err(path))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(io_err(path))?;
        let w: StudyWindow = serde_json::from_reader(BufReader::new(file))?;
        w.validate()?;
        Ok(w)
    }
}

/// Planar points inside a study window.
#[derive(Debug, Clone, PartialEq)]
pub struct PointPattern {
    points: Vec<[f64; 2]>,
    window: StudyWindow,
}

impl PointPattern {
    pub fn new(points: Vec<[f64; 2]>, window: StudyWindow) -> Result<Self> {
        window.validate()?;
        if let Some((i, p)) = points
            .iter()
            .enumerate()
            .find(|(_, p)| !window.contains(p[0], p[1]))
        {
            return Err(SimError::Config(format!(
                "point {i} at ({}, {}) lies outside the window",
                p[0], p[1]
            )));
        }
        Ok(Self { points, window })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn window(&self) -> &StudyWindow {
        &self.window
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Writes `x,y` rows with a header.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["x", "y"])?;
        for p in &self.points {
            wtr.write_record([p[0].to_string(), p[1].to_string()])?;
        }
        wtr.flush().map_err(|e| SimError::Csv(e.into()))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, window: StudyWindow) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if headers != ["x", "y"] {
            return Err(SimError::Config(format!(
                "pattern header must be x,y, found {}",
                headers.join(",")
            )));
        }
        let mut points = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| SimError::Row {
                    line,
                    message: format!("'{s}' is not a number"),
                })
            };
            points.push([parse(&record[0])?, parse(&record[1])?]);
        }
        Self::new(points, window)
    }

    /// Writes the CSV to `path` and the window to `<path>.window.json`.
    pub fn save(&self, path: &Path) -> Result<PathBuf> {
        let file = File::create(path).map_err(io_err(path))?;
        self.write_csv(BufWriter::new(file))?;
        let sidecar = window_sidecar(path);
        self.window.write_json(&sidecar)?;
        Ok(sidecar)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let window = StudyWindow::read_json(&window_sidecar(path))?;
        let file = File::open(path).map_err(io_err(path))?;
        Self::read_csv(BufReader::new(file), window)
    }
}

/// Path of the window descriptor stored next to a pattern CSV.
pub fn window_sidecar(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".window.json");
    PathBuf::from(name)
}

/// Sampling configuration for one PCQM survey.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurveyDesign {
    pub n: usize,
    pub q: u32,
    pub ell: u32,
    /// Search radius C.
    pub radius: f64,
    /// Minimum distance from focal points to the window edge.
    pub buffer: f64,
    pub seed: u64,
}

impl SurveyDesign {
    /// n = 120 focal points, q = 4 sectors and a buffer of C + 0.1.
    pub fn new(ell: u32, radius: f64, seed: u64) -> Self {
        Self {
            n: 120,
            q: 4,
            ell,
            radius,
            buffer: radius + 0.1,
            seed,
        }
    }

    pub fn validate(&self, window: &StudyWindow) -> Result<()> {
        if self.n == 0 || self.q == 0 || self.ell == 0 {
            return Err(SimError::Config("n, q and ell must all be >= 1".into()));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(SimError::Config(format!(
                "search radius must be positive and finite, got {}",
                self.radius
            )));
        }
        if !(self.buffer >= 0.0 && self.buffer.is_finite()) {
            return Err(SimError::Config(format!(
                "buffer must be nonnegative and finite, got {}",
                self.buffer
            )));
        }
        if !(window.width() > 2.0 * self.buffer && window.height() > 2.0 * self.buffer) {
            return Err(SimError::Config(format!(
                "buffer {} leaves no room for focal points in a {} x {} window",
                self.buffer,
                window.width(),
                window.height()
            )));
        }
        Ok(())
    }
}

fn uniform_points<R: Rng>(count: usize, window: &StudyWindow, rng: &mut R) -> Vec<[f64; 2]> {
    (0..count)
        .map(|_| {
            [
                window.x_min + rng.random::<f64>() * window.width(),
                window.y_min + rng.random::<f64>() * window.height(),
            ]
        })
        .collect()
}

fn poisson_count<R: Rng>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("positive finite mean");
    d.sample(rng) as usize
}

/// Homogeneous Poisson process of intensity `lambda` on `window`.
pub fn gen_poisson(lambda: f64, window: &StudyWindow, seed: u64) -> Result<PointPattern> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(SimError::Config(format!("intensity must be positive, got {lambda}")));
    }
    window.validate()?;
    let mut rng = stream_rng(seed, STREAM_POISSON);
    let count = poisson_count(lambda * window.area(), &mut rng);
    PointPattern::new(uniform_points(count, window, &mut rng), *window)
}

/// Thomas cluster process: parents of intensity `kappa` on the window grown
/// by 4σ, Poisson(`mu`) offspring per parent displaced by N(0, σ²) on each
/// axis. Only offspring inside the window are kept.
pub fn gen_thomas(
    kappa: f64,
    mu: f64,
    sigma: f64,
    window: &StudyWindow,
    seed: u64,
) -> Result<PointPattern> {
    for (name, v) in [("kappa", kappa), ("mu", mu), ("sigma", sigma)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(SimError::Config(format!("{name} must be positive, got {v}")));
        }
    }
    window.validate()?;
    let mut rng = stream_rng(seed, STREAM_THOMAS);
    let outer = window.expanded(4.0 * sigma);
    let parents = uniform_points(poisson_count(kappa * outer.area(), &mut rng), &outer, &mut rng);
    let offset = Normal::new(0.0, sigma).expect("positive sigma");
    let mut points = Vec::new();
    for p in parents {
        for _ in 0..poisson_count(mu, &mut rng) {
            let x = p[0] + offset.sample(&mut rng);
            let y = p[1] + offset.sample(&mut rng);
            if window.contains(x, y) {
                points.push([x, y]);
            }
        }
    }
    PointPattern::new(points, *window)
}

/// Latin hypercube design of `design.n` focal points on the window shrunk by
/// `design.buffer`: each axis is cut into n equal strata holding one point
/// each, with strata paired by independent random permutations.
pub fn lhs_focal_points(design: &SurveyDesign, window: &StudyWindow, seed: u64) -> Result<Vec<[f64; 2]>> {
    design.validate(window)?;
    let inner = window.expanded(-design.buffer);
    let mut rng = stream_rng(seed, STREAM_LHS);
    let n = design.n;
    let mut axis = |lo: f64, width: f64| -> Vec<f64> {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(&mut rng);
        strata
            .into_iter()
            .map(|s| lo + (s as f64 + rng.random::<f64>()) / n as f64 * width)
            .collect()
    };
    let xs = axis(inner.x_min, inner.width());
    let ys = axis(inner.y_min, inner.height());
    Ok(xs.into_iter().zip(ys).map(|(x, y)| [x, y]).collect())
}

/// Uniform bucket grid over a pattern for fixed-radius queries.
struct GridIndex<'a> {
    points: &'a [[f64; 2]],
    x0: f64,
    y0: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    starts: Vec<usize>,
    order: Vec<u32>,
}

impl<'a> GridIndex<'a> {
    fn new(pattern: &'a PointPattern, cell: f64) -> Self {
        let w = pattern.window();
        let nx = ((w.width() / cell).ceil() as usize).max(1);
        let ny = ((w.height() / cell).ceil() as usize).max(1);
        let mut idx = GridIndex {
            points: pattern.points(),
            x0: w.x_min,
            y0: w.y_min,
            cell,
            nx,
            ny,
            starts: vec![0; nx * ny + 1],
            order: Vec::new(),
        };
        let cells: Vec<usize> = idx.points.iter().map(|p| idx.cell_of(p[0], p[1])).collect();
        for &c in &cells {
            idx.starts[c + 1] += 1;
        }
        for i in 0..nx * ny {
            idx.starts[i + 1] += idx.starts[i];
        }
        let mut fill = idx.starts.clone();
        idx.order = vec![0; cells.len()];
        for (i, &c) in cells.iter().enumerate() {
            idx.order[fill[c]] = i as u32;
            fill[c] += 1;
        }
        idx
    }

    fn axis_cell(&self, v: f64, origin: f64, n: usize) -> usize {
        let c = ((v - origin) / self.cell).floor();
        if c < 0.0 {
            0
        } else {
            (c as usize).min(n - 1)
        }
    }

    fn cell_of(&self, x: f64, y: f64) -> usize {
        self.axis_cell(y, self.y0, self.ny) * self.nx + self.axis_cell(x, self.x0, self.nx)
    }

    /// Calls `f(index)` for every point in cells overlapping the square of
    /// half-width `r` around (x, y).
    fn for_each_near(&self, x: f64, y: f64, r: f64, mut f: impl FnMut(usize)) {
        let cx0 = self.axis_cell(x - r, self.x0, self.nx);
        let cx1 = self.axis_cell(x + r, self.x0, self.nx);
        let cy0 = self.axis_cell(y - r, self.y0, self.ny);
        let cy1 = self.axis_cell(y + r, self.y0, self.ny);
        for cy in cy0..=cy1 {
            for cx in cx0..=cx1 {
                let c = cy * self.nx + cx;
                for &i in &self.order[self.starts[c]..self.starts[c + 1]] {
                    f(i as usize);
                }
            }
        }
    }
}

/// Sector of direction (dx, dy): sector j (0-based) covers angles
/// [2πj/q, 2π(j+1)/q) counterclockwise from the positive x-axis.
pub fn sector_of(dx: f64, dy: f64, q: u32) -> u32 {
    let tau = std::f64::consts::TAU;
    let mut angle = dy.atan2(dx);
    if angle < 0.0 {
        // Rounds up to τ for tiny negative angles; those belong to the last sector.
        angle += tau;
    }
    ((angle / tau * q as f64).floor() as u32).min(q - 1)
}

/// Records, for every focal point and sector, the distance to the ℓ-th
/// nearest pattern point in that sector, censored when fewer than ℓ lie
/// within the search radius. A distance equal to C counts as observed;
/// pattern points coinciding with the focal point are ignored.
pub fn pcqm_sample(
    pattern: &PointPattern,
    focals: &[[f64; 2]],
    design: &SurveyDesign,
) -> Result<DistanceSample<f64>> {
    design.validate(pattern.window())?;
    if focals.is_empty() {
        return Err(SimError::Config("no focal points".into()));
    }
    let q = design.q as usize;
    let ell = design.ell as usize;
    let c = design.radius;
    let index = GridIndex::new(pattern, c);
    let mut cells = Vec::with_capacity(focals.len() * q);
    let mut per_sector: Vec<Vec<(f64, usize)>> = vec![Vec::new(); q];
    for f in focals {
        for s in per_sector.iter_mut() {
            s.clear();
        }
        index.for_each_near(f[0], f[1], c, |i| {
            let p = index.points[i];
            let dx = p[0] - f[0];
            let dy = p[1] - f[1];
            let d = dx.hypot(dy);
            if d > 0.0 && d <= c {
                per_sector[sector_of(dx, dy, design.q) as usize].push((d, i));
            }
        });
        for s in per_sector.iter_mut() {
            if s.len() < ell {
                cells.push(Observation::Censored);
            } else {
                s.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                cells.push(Observation::Observed(s[ell - 1].0));
            }
        }
    }
    Ok(DistanceSample::new(design.q, design.ell, c, cells)?)
}

/// I.i.d. NBD distances: r = √(k X / (a Y)) with X ~ Gamma(ℓ), Y ~ Gamma(k),
/// equivalently W = X/(X+Y) ~ Beta(ℓ, k) and r² = kW / (a(1 − W)).
pub fn sample_nbd_distances(model: &NbdModel<f64>, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, STREAM_NBD);
    let gx = Gamma::new(model.ell as f64, 1.0).expect("valid shape");
    let gy = Gamma::new(model.k, 1.0).expect("valid shape");
    let a = model.scale();
    (0..count)
        .map(|_| {
            let x: f64 = gx.sample(&mut rng);
            let y: f64 = gy.sample(&mut rng);
            (model.k * x / (a * y)).sqrt()
        })
        .collect()
}

/// I.i.d. CSR distances: r = √(X / a) with X ~ Gamma(ℓ).
pub fn sample_csr_distances(model: &CsrModel<f64>, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, STREAM_CSR);
    let g = Gamma::new(model.ell as f64, 1.0).expect("valid shape");
    let a = model.scale();
    (0..count)
        .map(|_| {
            let x: f64 = g.sample(&mut rng);
            (x / a).sqrt()
        })
        .collect()
}
