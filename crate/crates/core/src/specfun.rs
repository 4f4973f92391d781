//! Special functions used by the distance models: log-gamma, incomplete gamma
//! (raw, regularized and logarithmic forms), the regularized incomplete beta
//! function, and the root solve for the expected sector count implied by an
//! observed censoring rate.
//!
//! Everything that can overflow is evaluated in log space; the raw forms are
//! thin `exp` wrappers around the logarithmic ones.

use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecialError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{function} did not converge within {max_iter} iterations")]
    NoConvergence {
        function: &'static str,
        max_iter: usize,
    },
    #[error("censoring rate is zero; the sample is uncensored and needs no adjustment")]
    Uncensored,
    #[error("every observation is censored")]
    AllCensored,
}

pub type Result<T> = std::result::Result<T, SpecialError>;

/// Accuracy target and iteration cap for the series and continued fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceConfig<T> {
    pub rel_tol: T,
    pub max_iter: usize,
}

impl<T: Scalar> ToleranceConfig<T> {
    pub fn new(rel_tol: T, max_iter: usize) -> Result<Self> {
        if !(rel_tol > T::zero() && rel_tol <= T::lit(1e-6)) {
            return Err(SpecialError::Domain(format!(
                "rel_tol must lie in (0, 1e-6], got {rel_tol}"
            )));
        }
        if max_iter < 50 {
            return Err(SpecialError::Domain(format!(
                "max_iter must be at least 50, got {max_iter}"
            )));
        }
        Ok(Self { rel_tol, max_iter })
    }
}

impl<T: Scalar> Default for ToleranceConfig<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::epsilon(),
            max_iter: 10_000,
        }
    }
}

// B_{2n} / (2n (2n-1)) for the Stirling correction series.
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
];

const STIRLING_MIN: f64 = 10.0;

/// ln Γ(x) − [(x − ½) ln x − x + ½ ln 2π], valid for x ≥ 10.
fn stirling_correction<T: Scalar>(x: T) -> T {
    let inv = x.recip();
    let inv2 = inv * inv;
    let mut sum = T::zero();
    for &c in STIRLING.iter().rev() {
        sum = sum * inv2 + T::lit(c);
    }
    sum * inv
}

fn ln_gamma_unchecked<T: Scalar>(a: T) -> T {
    let big = T::lit(STIRLING_MIN);
    let half = T::lit(0.5);
    let half_ln_two_pi = T::lit(0.918_938_533_204_672_8);
    if a >= big {
        return (a - half) * a.ln() - a + half_ln_two_pi + stirling_correction(a);
    }
    let mut x = a;
    let mut prod = T::one();
    while x < big {
        prod = prod * x;
        x = x + T::one();
    }
    (x - half) * x.ln() - x + half_ln_two_pi + stirling_correction(x) - prod.ln()
}

fn check_positive<T: Scalar>(name: &str, a: T) -> Result<()> {
    if a > T::zero() && a.is_finite() {
        Ok(())
    } else {
        Err(SpecialError::Domain(format!(
            "{name} must be positive and finite, got {a}"
        )))
    }
}

/// Natural log of Γ(a) for a > 0.
pub fn ln_gamma<T: Scalar>(a: T) -> Result<T> {
    check_positive("a", a)?;
    if a == T::one() || a == T::lit(2.0) {
        return Ok(T::zero());
    }
    Ok(ln_gamma_unchecked(a))
}

/// ln Γ(x + s) − ln Γ(x), evaluated without cancellation when x is large.
pub fn ln_gamma_ratio<T: Scalar>(x: T, s: T) -> Result<T> {
    check_positive("x", x)?;
    let xs = x + s;
    check_positive("x + s", xs)?;
    if s == T::zero() {
        return Ok(T::zero());
    }
    let big = T::lit(STIRLING_MIN);
    if x >= big && xs >= big {
        let half = T::lit(0.5);
        Ok((x - half) * (s / x).ln_1p() + s * xs.ln() - s + stirling_correction(xs)
            - stirling_correction(x))
    } else {
        Ok(ln_gamma_unchecked(xs) - ln_gamma_unchecked(x))
    }
}

/// ln B(a, b).
pub fn ln_beta<T: Scalar>(a: T, b: T) -> Result<T> {
    check_positive("a", a)?;
    check_positive("b", b)?;
    let (small, large) = if a < b { (a, b) } else { (b, a) };
    Ok(ln_gamma_unchecked(small) - ln_gamma_ratio(large, small)?)
}

/// Regularized incomplete gamma pair P(a, x), Q(a, x) with their logarithms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncGamma<T> {
    pub p: T,
    pub q: T,
    pub ln_p: T,
    pub ln_q: T,
}

/// P(a, x) and Q(a, x). The series is used below x = a + 1 and the Lentz
/// continued fraction for Q above it; the complement is always taken from
/// the side that does not cancel.
pub fn inc_gamma<T: Scalar>(a: T, x: T, tol: &ToleranceConfig<T>) -> Result<IncGamma<T>> {
    check_positive("a", a)?;
    if x.is_nan() || x < T::zero() {
        return Err(SpecialError::Domain(format!("x must be nonnegative, got {x}")));
    }
    if x == T::zero() {
        return Ok(IncGamma {
            p: T::zero(),
            q: T::one(),
            ln_p: T::neg_infinity(),
            ln_q: T::zero(),
        });
    }
    if x.is_infinite() {
        return Ok(IncGamma {
            p: T::one(),
            q: T::zero(),
            ln_p: T::zero(),
            ln_q: T::neg_infinity(),
        });
    }
    let ln_front = a * x.ln() - x - ln_gamma_unchecked(a);
    if x < a + T::one() {
        let series = lower_series(a, x, tol)?;
        let ln_p = ln_front + series.ln();
        let p = ln_p.exp();
        Ok(IncGamma {
            p,
            q: T::one() - p,
            ln_p,
            ln_q: (-p).ln_1p(),
        })
    } else {
        let cf = upper_continued_fraction(a, x, tol)?;
        let ln_q = ln_front + cf.ln();
        let q = ln_q.exp();
        Ok(IncGamma {
            p: T::one() - q,
            q,
            ln_p: (-q).ln_1p(),
            ln_q,
        })
    }
}

// Σ x^n / (a (a+1) ... (a+n)), so that P = x^a e^{-x} / Γ(a) · series.
fn lower_series<T: Scalar>(a: T, x: T, tol: &ToleranceConfig<T>) -> Result<T> {
    let mut ap = a;
    let mut term = a.recip();
    let mut sum = term;
    for _ in 0..tol.max_iter {
        ap = ap + T::one();
        term = term * x / ap;
        sum = sum + term;
        if term.abs() <= sum.abs() * tol.rel_tol {
            return Ok(sum);
        }
    }
    Err(SpecialError::NoConvergence {
        function: "incomplete gamma series",
        max_iter: tol.max_iter,
    })
}

// Continued fraction h with Q = x^a e^{-x} / Γ(a) · h, modified Lentz.
fn upper_continued_fraction<T: Scalar>(a: T, x: T, tol: &ToleranceConfig<T>) -> Result<T> {
    let tiny = T::min_positive_value() / T::epsilon();
    let one = T::one();
    let two = T::lit(2.0);
    let mut b = x + one - a;
    let mut c = tiny.recip();
    let mut d = if b.abs() < tiny { tiny.recip() } else { b.recip() };
    let mut h = d;
    for i in 1..=tol.max_iter {
        let fi = T::from_count(i);
        let an = -fi * (fi - a);
        b = b + two;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        let delta = d * c;
        h = h * delta;
        if (delta - one).abs() <= tol.rel_tol {
            return Ok(h);
        }
    }
    Err(SpecialError::NoConvergence {
        function: "incomplete gamma continued fraction",
        max_iter: tol.max_iter,
    })
}

/// Lower incomplete gamma γ(a, x) = ∫₀ˣ t^{a−1} e^{−t} dt.
pub fn lower_inc_gamma<T: Scalar>(a: T, x: T) -> Result<T> {
    Ok(ln_lower_inc_gamma(a, x)?.exp())
}

/// Upper incomplete gamma Γ(a, x) = ∫ₓ^∞ t^{a−1} e^{−t} dt.
pub fn upper_inc_gamma<T: Scalar>(a: T, x: T) -> Result<T> {
    Ok(ln_upper_inc_gamma(a, x)?.exp())
}

pub fn ln_lower_inc_gamma<T: Scalar>(a: T, x: T) -> Result<T> {
    let g = inc_gamma(a, x, &ToleranceConfig::default())?;
    Ok(g.ln_p + ln_gamma_unchecked(a))
}

pub fn ln_upper_inc_gamma<T: Scalar>(a: T, x: T) -> Result<T> {
    let g = inc_gamma(a, x, &ToleranceConfig::default())?;
    Ok(g.ln_q + ln_gamma_unchecked(a))
}

/// P(a, x) = γ(a, x) / Γ(a).
pub fn reg_lower_inc_gamma<T: Scalar>(a: T, x: T) -> Result<T> {
    Ok(inc_gamma(a, x, &ToleranceConfig::default())?.p)
}

/// Q(a, x) = Γ(a, x) / Γ(a).
pub fn reg_upper_inc_gamma<T: Scalar>(a: T, x: T) -> Result<T> {
    Ok(inc_gamma(a, x, &ToleranceConfig::default())?.q)
}

/// I_w(a, b) and its complement 1 − I_w(a, b), with logarithms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncBeta<T> {
    pub value: T,
    pub complement: T,
    pub ln_value: T,
    pub ln_complement: T,
}

/// Regularized incomplete beta with the argument supplied as the pair
/// (w, 1 − w), so callers holding an accurate 1 − w near w = 1 keep it.
pub fn inc_beta_split<T: Scalar>(
    w: T,
    w_c: T,
    a: T,
    b: T,
    tol: &ToleranceConfig<T>,
) -> Result<IncBeta<T>> {
    check_positive("a", a)?;
    check_positive("b", b)?;
    let unit = |v: T| v >= T::zero() && v <= T::one();
    if !unit(w) || !unit(w_c) {
        return Err(SpecialError::Domain(format!(
            "beta argument must lie in [0, 1], got w = {w}, 1 - w = {w_c}"
        )));
    }
    if w == T::zero() {
        return Ok(IncBeta {
            value: T::zero(),
            complement: T::one(),
            ln_value: T::neg_infinity(),
            ln_complement: T::zero(),
        });
    }
    if w_c == T::zero() {
        return Ok(IncBeta {
            value: T::one(),
            complement: T::zero(),
            ln_value: T::zero(),
            ln_complement: T::neg_infinity(),
        });
    }
    let ln_front = a * w.ln() + b * w_c.ln() - ln_beta(a, b)?;
    let split = (a + T::one()) / (a + b + T::lit(2.0));
    if w < split {
        let cf = beta_continued_fraction(a, b, w, tol)?;
        let ln_value = ln_front - a.ln() + cf.ln();
        let value = ln_value.exp();
        Ok(IncBeta {
            value,
            complement: T::one() - value,
            ln_value,
            ln_complement: (-value).ln_1p(),
        })
    } else {
        let cf = beta_continued_fraction(b, a, w_c, tol)?;
        let ln_complement = ln_front - b.ln() + cf.ln();
        let complement = ln_complement.exp();
        Ok(IncBeta {
            value: T::one() - complement,
            complement,
            ln_value: (-complement).ln_1p(),
            ln_complement,
        })
    }
}

/// I_w(a, b), the regularized incomplete beta function.
pub fn reg_inc_beta<T: Scalar>(w: T, a: T, b: T) -> Result<T> {
    Ok(inc_beta_split(w, T::one() - w, a, b, &ToleranceConfig::default())?.value)
}

fn beta_continued_fraction<T: Scalar>(a: T, b: T, x: T, tol: &ToleranceConfig<T>) -> Result<T> {
    let tiny = T::min_positive_value() / T::epsilon();
    let one = T::one();
    let two = T::lit(2.0);
    let qab = a + b;
    let qap = a + one;
    let qam = a - one;
    let clamp = |v: T| if v.abs() < tiny { tiny } else { v };
    let mut c = one;
    let mut d = clamp(one - qab * x / qap).recip();
    let mut h = d;
    for m in 1..=tol.max_iter {
        let mf = T::from_count(m);
        let m2 = two * mf;
        let aa = mf * (b - mf) * x / ((qam + m2) * (a + m2));
        d = clamp(one + aa * d).recip();
        c = clamp(one + aa / c);
        h = h * d * c;
        let aa = -(a + mf) * (qab + mf) * x / ((a + m2) * (qap + m2));
        d = clamp(one + aa * d).recip();
        c = clamp(one + aa / c);
        let delta = d * c;
        h = h * delta;
        if (delta - one).abs() <= tol.rel_tol {
            return Ok(h);
        }
    }
    Err(SpecialError::NoConvergence {
        function: "incomplete beta continued fraction",
        max_iter: tol.max_iter,
    })
}

/// Solves P(ℓ, m) = 1 − p₀ for m, the expected number of individuals in a
/// sector of radius C that reproduces the censoring rate p₀.
///
/// P(ℓ, ·) is strictly increasing, so the root is bracketed by doubling the
/// upper end and then bisected down to adjacent floating point values. The
/// residual is taken on Q = 1 − P, which stays accurate for small p₀.
pub fn solve_m_c<T: Scalar>(ell: u32, p0: T) -> Result<T> {
    if ell == 0 {
        return Err(SpecialError::Domain("neighbor order must be >= 1".into()));
    }
    if p0.is_nan() || p0 < T::zero() {
        return Err(SpecialError::Domain(format!(
            "censoring rate must lie in [0, 1), got {p0}"
        )));
    }
    if p0 == T::zero() {
        return Err(SpecialError::Uncensored);
    }
    if p0 >= T::one() {
        return Err(SpecialError::AllCensored);
    }
    let tol = ToleranceConfig::default();
    let a = T::from_u32(ell).expect("small integer");
    let residual = |m: T| -> Result<T> { Ok(inc_gamma(a, m, &tol)?.q - p0) };

    let mut lo = T::lit(1e-12);
    let mut f_lo = residual(lo)?;
    if f_lo < T::zero() {
        lo = T::zero();
        f_lo = T::one() - p0;
    }
    let mut hi = T::one().max(lo);
    let mut f_hi = residual(hi)?;
    let mut doublings = 0;
    while f_hi > T::zero() {
        lo = hi;
        f_lo = f_hi;
        hi = hi * T::lit(2.0);
        f_hi = residual(hi)?;
        doublings += 1;
        if doublings > 2000 || !hi.is_finite() {
            return Err(SpecialError::NoConvergence {
                function: "m_C bracket expansion",
                max_iter: 2000,
            });
        }
    }
    for _ in 0..tol.max_iter {
        let mid = lo + (hi - lo) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = residual(mid)?;
        if f_mid == T::zero() {
            return Ok(mid);
        }
        if f_mid > T::zero() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    Ok(if f_lo.abs() <= f_hi.abs() { lo } else { hi })
}
