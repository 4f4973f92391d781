//! Bounded derivative-free maximization: golden-section search in one
//! dimension and Nelder–Mead with restarts in two.
//!
//! Likelihood callers optimize over log-parameters (θ = ln λ, φ = ln k) so
//! positivity needs no constraint handling; the routines here are agnostic
//! about the parameterization and report whatever coordinates they were given.

use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimError {
    #[error("invalid bracket: lo = {lo}, hi = {hi}")]
    InvalidBracket { lo: f64, hi: f64 },
    #[error("objective is not finite anywhere on the probe set")]
    NonFinite,
    #[error("no run converged; best so far {best_value} at {best_argmax:?}")]
    NotConverged {
        best_argmax: Vec<f64>,
        best_value: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult<T> {
    pub argmax: Vec<T>,
    pub value: T,
    pub iterations: usize,
    pub converged: bool,
}

fn finite_or_floor<T: Scalar>(v: T) -> T {
    if v.is_nan() {
        T::neg_infinity()
    } else {
        v
    }
}

const PROBE_INTERVALS: usize = 16;
const MAX_EXPANSIONS: usize = 40;
const GOLDEN_MAX_ITER: usize = 500;

/// Golden-section ascent. A coarse probe grid locates the best cell first and
/// the bracket is extended outward while the maximum sits on its edge, so a
/// unimodal objective whose peak lies outside the initial bracket is still
/// found. Stops when the interval width is at most `tol · max(|x|, 1)`.
pub fn maximize_1d<T, F>(mut objective: F, bracket: (T, T), tol: T) -> Result<OptimResult<T>, OptimError>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(OptimError::InvalidBracket {
            lo: lo.to_f64().unwrap_or(f64::NAN),
            hi: hi.to_f64().unwrap_or(f64::NAN),
        });
    }
    let mut evals = 0usize;
    let mut eval = |x: T, evals: &mut usize| {
        *evals += 1;
        finite_or_floor(objective(x))
    };

    let n = PROBE_INTERVALS;
    let at_edge;
    let (mut a, mut b);
    let mut expansions = 0;
    loop {
        let step = (hi - lo) / T::from_count(n);
        let grid: Vec<T> = (0..=n).map(|i| lo + step * T::from_count(i)).collect();
        let values: Vec<T> = grid.iter().map(|&x| eval(x, &mut evals)).collect();
        let (best, best_val) = values
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        if best_val == T::neg_infinity() {
            return Err(OptimError::NonFinite);
        }
        if best == 0 && expansions < MAX_EXPANSIONS {
            let width = hi - lo;
            hi = grid[1];
            lo = lo - width;
            expansions += 1;
            continue;
        }
        if best == n && expansions < MAX_EXPANSIONS {
            let width = hi - lo;
            lo = grid[n - 1];
            hi = hi + width;
            expansions += 1;
            continue;
        }
        at_edge = best == 0 || best == n;
        a = grid[best.saturating_sub(1)];
        b = grid[(best + 1).min(n)];
        break;
    }

    let inv_phi = T::lit(0.618_033_988_749_894_8);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = eval(x1, &mut evals);
    let mut f2 = eval(x2, &mut evals);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < GOLDEN_MAX_ITER {
        let mid = (a + b) * T::lit(0.5);
        if b - a <= tol * mid.abs().max(T::one()) {
            converged = true;
            break;
        }
        iterations += 1;
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = eval(x1, &mut evals);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = eval(x2, &mut evals);
        }
    }
    let (x, v) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    Ok(OptimResult {
        argmax: vec![x],
        value: v,
        iterations,
        converged: converged && !at_edge,
    })
}

/// Settings for [`maximize_2d_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions<T> {
    /// Relative spread of vertex values at which a run stops.
    pub tol: T,
    pub max_iter: usize,
    /// Additional runs started from the best point found so far, shifted by
    /// a fixed offset sequence.
    pub restarts: usize,
    /// Edge length of the initial simplex in each coordinate.
    pub initial_step: T,
    /// Finish with finite-difference Newton steps near the optimum.
    pub polish: bool,
}

impl<T: Scalar> Default for SimplexOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-10),
            max_iter: 2000,
            restarts: 3,
            initial_step: T::lit(0.25),
            polish: true,
        }
    }
}

// Perturbations for the restarts, in units of the initial step.
const RESTART_OFFSETS: [[f64; 2]; 4] = [[0.5, -0.5], [-0.5, 0.5], [0.5, 0.5], [-0.5, -0.5]];

/// Nelder–Mead ascent with default settings.
pub fn maximize_2d<T, F>(objective: F, start: [T; 2], tol: T) -> Result<OptimResult<T>, OptimError>
where
    T: Scalar,
    F: FnMut(&[T; 2]) -> T,
{
    let opts = SimplexOptions {
        tol,
        ..SimplexOptions::default()
    };
    maximize_2d_with(objective, start, &opts)
}

/// Nelder–Mead ascent followed by restarts from perturbed copies of the best
/// point; returns the best run. Deterministic for a given objective and start.
pub fn maximize_2d_with<T, F>(
    mut objective: F,
    start: [T; 2],
    opts: &SimplexOptions<T>,
) -> Result<OptimResult<T>, OptimError>
where
    T: Scalar,
    F: FnMut(&[T; 2]) -> T,
{
    let mut f = |x: &[T; 2]| finite_or_floor(objective(x));
    if !f(&start).is_finite() {
        return Err(OptimError::NonFinite);
    }
    let mut best = simplex_run(&mut f, start, opts);
    let mut any_converged = best.converged;
    let mut total_iter = best.iterations;
    for offset in RESTART_OFFSETS.iter().take(opts.restarts) {
        let from = [
            best.argmax[0] + T::lit(offset[0]) * opts.initial_step,
            best.argmax[1] + T::lit(offset[1]) * opts.initial_step,
        ];
        if !f(&from).is_finite() {
            continue;
        }
        let run = simplex_run(&mut f, from, opts);
        total_iter += run.iterations;
        any_converged |= run.converged;
        if run.value > best.value {
            best = run;
        }
    }
    if !any_converged {
        return Err(OptimError::NotConverged {
            best_argmax: best.argmax.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect(),
            best_value: best.value.to_f64().unwrap_or(f64::NAN),
        });
    }
    if opts.polish {
        newton_polish(&mut f, &mut best);
    }
    best.iterations = total_iter;
    best.converged = true;
    Ok(best)
}

fn simplex_run<T, F>(f: &mut F, start: [T; 2], opts: &SimplexOptions<T>) -> OptimResult<T>
where
    T: Scalar,
    F: FnMut(&[T; 2]) -> T,
{
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let mut pts = [
        start,
        [start[0] + opts.initial_step, start[1]],
        [start[0], start[1] + opts.initial_step],
    ];
    let mut vals = [f(&pts[0]), f(&pts[1]), f(&pts[2])];
    let mut iterations = 0;
    let mut converged = false;
    loop {
        // Order best first; the sort is stable so ties keep the start in front.
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&i, &j| vals[j].partial_cmp(&vals[i]).unwrap_or(std::cmp::Ordering::Equal));
        pts = [pts[idx[0]], pts[idx[1]], pts[idx[2]]];
        vals = [vals[idx[0]], vals[idx[1]], vals[idx[2]]];

        let (hi, lo) = (vals[0], vals[2]);
        let spread = (hi - lo).abs();
        let scale = (hi.abs() + lo.abs()) * half;
        if hi.is_finite() && lo.is_finite() && spread <= opts.tol * scale {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        let centroid = [(pts[0][0] + pts[1][0]) * half, (pts[0][1] + pts[1][1]) * half];
        let along = |t: T| {
            [
                centroid[0] + t * (pts[2][0] - centroid[0]),
                centroid[1] + t * (pts[2][1] - centroid[1]),
            ]
        };
        let reflected = along(-T::one());
        let fr = f(&reflected);
        if fr > vals[0] {
            let expanded = along(-two);
            let fe = f(&expanded);
            if fe > fr {
                pts[2] = expanded;
                vals[2] = fe;
            } else {
                pts[2] = reflected;
                vals[2] = fr;
            }
            continue;
        }
        if fr > vals[1] {
            pts[2] = reflected;
            vals[2] = fr;
            continue;
        }
        if fr > vals[2] {
            let outside = along(-half);
            let fc = f(&outside);
            if fc >= fr {
                pts[2] = outside;
                vals[2] = fc;
                continue;
            }
        } else {
            let inside = along(half);
            let fc = f(&inside);
            if fc > vals[2] {
                pts[2] = inside;
                vals[2] = fc;
                continue;
            }
        }
        for i in 1..3 {
            pts[i] = [
                pts[0][0] + half * (pts[i][0] - pts[0][0]),
                pts[0][1] + half * (pts[i][1] - pts[0][1]),
            ];
            vals[i] = f(&pts[i]);
        }
    }
    OptimResult {
        argmax: pts[0].to_vec(),
        value: vals[0],
        iterations,
        converged,
    }
}

// Central-difference Newton steps. Comparison-based search cannot resolve the
// optimum of a large summed log-likelihood below the rounding noise of its
// value; a few Newton steps on differenced values can.
fn newton_polish<T, F>(f: &mut F, best: &mut OptimResult<T>)
where
    T: Scalar,
    F: FnMut(&[T; 2]) -> T,
{
    let mut x = [best.argmax[0], best.argmax[1]];
    let mut fx = best.value;
    let gh = T::lit(1e-5);
    let hh = T::lit(1e-3);
    let two = T::lit(2.0);
    let mut f_at = |p: [T; 2]| f(&p);
    for _ in 0..6 {
        let g = [
            (f_at([x[0] + gh, x[1]]) - f_at([x[0] - gh, x[1]])) / (two * gh),
            (f_at([x[0], x[1] + gh]) - f_at([x[0], x[1] - gh])) / (two * gh),
        ];
        let h00 = (f_at([x[0] + hh, x[1]]) - two * fx + f_at([x[0] - hh, x[1]])) / (hh * hh);
        let h11 = (f_at([x[0], x[1] + hh]) - two * fx + f_at([x[0], x[1] - hh])) / (hh * hh);
        let h01 = (f_at([x[0] + hh, x[1] + hh]) - f_at([x[0] + hh, x[1] - hh])
            - f_at([x[0] - hh, x[1] + hh])
            + f_at([x[0] - hh, x[1] - hh]))
            / (T::lit(4.0) * hh * hh);
        let det = h00 * h11 - h01 * h01;
        if !(h00 < T::zero() && det > T::zero()) || !g[0].is_finite() || !g[1].is_finite() {
            break;
        }
        let step = [
            -(h11 * g[0] - h01 * g[1]) / det,
            -(-h01 * g[0] + h00 * g[1]) / det,
        ];
        let len = (step[0] * step[0] + step[1] * step[1]).sqrt();
        if !len.is_finite() || len > T::lit(0.1) {
            break;
        }
        let next = [x[0] + step[0], x[1] + step[1]];
        let f_next = f_at(next);
        let slack = T::lit(1e-12) * fx.abs().max(T::one());
        if !(f_next >= fx - slack) {
            break;
        }
        x = next;
        fx = f_next.max(fx);
        if len <= T::lit(1e-12) {
            break;
        }
    }
    best.argmax = x.to_vec();
    best.value = fx;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_quadratic_vertex() {
        let r = maximize_1d(|x: f64| -(x - 2.0).powi(2), (0.0, 5.0), 1e-10).unwrap();
        assert!(r.converged);
        assert!((r.argmax[0] - 2.0).abs() < 1e-7);
    }

    #[test]
    fn golden_expands_past_the_bracket() {
        // Increasing on the bracket, peak at x = 7.
        let r = maximize_1d(|x: f64| 7.0 * x.ln() - x, (0.5, 3.0), 1e-10).unwrap();
        assert!(r.converged);
        assert!((r.argmax[0] - 7.0).abs() < 1e-6);
    }

    #[test]
    fn golden_rejects_degenerate_input() {
        assert!(matches!(
            maximize_1d(|x: f64| x, (1.0, 1.0), 1e-10),
            Err(OptimError::InvalidBracket { .. })
        ));
        assert_eq!(
            maximize_1d(|_x: f64| f64::NAN, (0.0, 1.0), 1e-10),
            Err(OptimError::NonFinite)
        );
    }

    #[test]
    fn simplex_finds_separable_quadratic() {
        let r = maximize_2d(|p: &[f64; 2]| -(p[0] - 1.0).powi(2) - (p[1] - 3.0).powi(2), [0.0, 0.0], 1e-12)
            .unwrap();
        assert!((r.argmax[0] - 1.0).abs() < 1e-6);
        assert!((r.argmax[1] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn simplex_flat_objective_returns_start() {
        let r = maximize_2d(|_p: &[f64; 2]| 4.2, [0.3, -1.1], 1e-10).unwrap();
        assert!(r.converged);
        assert_eq!(r.argmax, vec![0.3, -1.1]);
    }

    #[test]
    fn simplex_is_shift_invariant_and_deterministic() {
        let f = |p: &[f64; 2]| -((p[0] - 0.4).powi(2) + 3.0 * (p[1] + 0.2).powi(2) + p[0] * p[1]);
        let a = maximize_2d(f, [1.0, 1.0], 1e-10).unwrap();
        let b = maximize_2d(f, [1.0, 1.0], 1e-10).unwrap();
        let c = maximize_2d(|p: &[f64; 2]| f(p) + 1e3, [1.0, 1.0], 1e-10).unwrap();
        assert_eq!(a, b);
        assert!((a.argmax[0] - c.argmax[0]).abs() < 1e-6);
        assert!((a.argmax[1] - c.argmax[1]).abs() < 1e-6);
    }

    #[test]
    fn simplex_non_finite_start_is_an_error() {
        assert_eq!(
            maximize_2d(|_p: &[f64; 2]| f64::NAN, [0.0, 0.0], 1e-10),
            Err(OptimError::NonFinite)
        );
    }
}
