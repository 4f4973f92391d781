//! Distance distributions for the ℓ-th nearest individual within one of q
//! equal-angle sectors, under complete spatial randomness (Poisson) and under
//! negative-binomial aggregation.
//!
//! With a = πλ/q the CSR distance satisfies a·R² ~ Gamma(ℓ, 1); under the NBD
//! model W = aR² / (aR² + k) ~ Beta(ℓ, k). All moments below follow from those
//! two representations.

use thiserror::Error;

use crate::specfun::{self, inc_beta_split, inc_gamma, SpecialError, ToleranceConfig};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error(transparent)]
    Special(#[from] SpecialError),
}

pub type Result<T> = std::result::Result<T, ModelError>;

fn domain<T>(msg: String) -> Result<T> {
    Err(ModelError::Domain(msg))
}

fn order_as<T: Scalar>(n: u32) -> T {
    T::from_u32(n).expect("small integer")
}

/// Poisson (CSR) distance model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsrModel<T> {
    pub lambda: T,
    pub q: u32,
    pub ell: u32,
}

/// Negative-binomial distance model; k → ∞ recovers [`CsrModel`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NbdModel<T> {
    pub lambda: T,
    pub k: T,
    pub q: u32,
    pub ell: u32,
}

fn check_design(q: u32, ell: u32) -> Result<()> {
    if q == 0 {
        return domain("sector count q must be >= 1".into());
    }
    if ell == 0 {
        return domain("neighbor order must be >= 1".into());
    }
    Ok(())
}

impl<T: Scalar> CsrModel<T> {
    pub fn new(lambda: T, q: u32, ell: u32) -> Result<Self> {
        if !(lambda > T::zero() && lambda.is_finite()) {
            return domain(format!("density must be positive and finite, got {lambda}"));
        }
        check_design(q, ell)?;
        Ok(Self { lambda, q, ell })
    }

    /// a = πλ/q, the expected count per unit squared radius in one sector.
    pub fn scale(&self) -> T {
        T::PI() * self.lambda / order_as(self.q)
    }

    fn ell_t(&self) -> T {
        order_as(self.ell)
    }

    pub fn ln_pdf(&self, r: T) -> Result<T> {
        if !(r > T::zero()) {
            return domain(format!("distance must be positive, got {r}"));
        }
        let a = self.scale();
        let m = a * r * r;
        let ell = self.ell_t();
        Ok(T::LN_2() + a.ln() + r.ln() + (ell - T::one()) * m.ln()
            - specfun::ln_gamma(ell)?
            - m)
    }

    /// Density of the ℓ-th neighbor distance in a sector.
    pub fn pdf(&self, r: T) -> Result<T> {
        Ok(self.ln_pdf(r)?.exp())
    }

    /// P(R ≤ r) = γ(ℓ, a r²) / Γ(ℓ).
    pub fn cdf(&self, r: T) -> Result<T> {
        Ok(self.tail_split(r)?.p)
    }

    /// ln P(R > r), accurate far into the tail.
    pub fn ln_survival(&self, r: T) -> Result<T> {
        Ok(self.tail_split(r)?.ln_q)
    }

    fn tail_split(&self, r: T) -> Result<specfun::IncGamma<T>> {
        if r.is_nan() || r < T::zero() {
            return domain(format!("distance must be nonnegative, got {r}"));
        }
        let m = self.scale() * r * r;
        Ok(inc_gamma(self.ell_t(), m, &ToleranceConfig::default())?)
    }

    fn check_order(&self, u: T) -> Result<T> {
        let alpha = self.ell_t() + u / T::lit(2.0);
        if !(alpha > T::zero()) {
            return domain(format!(
                "moment order u = {u} requires u > -2ℓ = {}",
                -T::lit(2.0) * self.ell_t()
            ));
        }
        Ok(alpha)
    }

    /// E[R^u] = a^{−u/2} Γ(ℓ + u/2) / Γ(ℓ).
    pub fn moment(&self, u: T) -> Result<T> {
        self.check_order(u)?;
        let ell = self.ell_t();
        let half_u = u / T::lit(2.0);
        Ok((-half_u * self.scale().ln() + specfun::ln_gamma_ratio(ell, half_u)?).exp())
    }

    /// E[R^u | R > C] = a^{−u/2} Γ(ℓ + u/2, aC²) / Γ(ℓ, aC²).
    pub fn truncated_moment_upper(&self, u: T, c: T) -> Result<T> {
        let (ln_moment, ln_tail) = self.ln_truncated_upper(u, c)?;
        if ln_tail < T::tiny_probability().ln() {
            return Err(ModelError::Numeric(format!(
                "P(R > C) = exp({ln_tail}) underflows; conditional moment beyond C is undefined"
            )));
        }
        Ok(ln_moment.exp())
    }

    // (ln E[R^u | R > C], ln P(R > C)), both kept in log space so far tails
    // remain finite.
    fn ln_truncated_upper(&self, u: T, c: T) -> Result<(T, T)> {
        let alpha = self.check_order(u)?;
        if !(c >= T::zero()) {
            return domain(format!("truncation radius must be nonnegative, got {c}"));
        }
        let a = self.scale();
        let t = a * c * c;
        let tol = ToleranceConfig::default();
        let ell = self.ell_t();
        let denom = inc_gamma(ell, t, &tol)?;
        let numer = inc_gamma(alpha, t, &tol)?;
        let ln_ratio = numer.ln_q + specfun::ln_gamma_ratio(ell, alpha - ell)? - denom.ln_q;
        Ok((-(u / T::lit(2.0)) * a.ln() + ln_ratio, denom.ln_q))
    }

    /// E[R^u | R ≤ C] = a^{−u/2} γ(ℓ + u/2, aC²) / (Γ(ℓ) P(R ≤ C)).
    pub fn truncated_moment_lower(&self, u: T, c: T) -> Result<T> {
        let alpha = self.check_order(u)?;
        if !(c > T::zero()) {
            return domain(format!("truncation radius must be positive, got {c}"));
        }
        let a = self.scale();
        let t = a * c * c;
        let tol = ToleranceConfig::default();
        let ell = self.ell_t();
        let denom = inc_gamma(ell, t, &tol)?;
        if denom.p == T::zero() {
            return Err(ModelError::Numeric("P(R <= C) is zero".into()));
        }
        let numer = inc_gamma(alpha, t, &tol)?;
        let ln_ratio = numer.ln_p + specfun::ln_gamma_ratio(ell, alpha - ell)? - denom.ln_p;
        Ok((-(u / T::lit(2.0)) * a.ln() + ln_ratio).exp())
    }
}

impl<T: Scalar> NbdModel<T> {
    pub fn new(lambda: T, k: T, q: u32, ell: u32) -> Result<Self> {
        if !(lambda > T::zero() && lambda.is_finite()) {
            return domain(format!("density must be positive and finite, got {lambda}"));
        }
        if !(k > T::zero() && k.is_finite()) {
            return domain(format!("aggregation k must be positive and finite, got {k}"));
        }
        check_design(q, ell)?;
        Ok(Self { lambda, k, q, ell })
    }

    pub fn scale(&self) -> T {
        T::PI() * self.lambda / order_as(self.q)
    }

    fn ell_t(&self) -> T {
        order_as(self.ell)
    }

    /// The CSR model with the same density and design.
    pub fn poisson_limit(&self) -> CsrModel<T> {
        CsrModel {
            lambda: self.lambda,
            q: self.q,
            ell: self.ell,
        }
    }

    // ln[Γ(ℓ + k) / (Γ(k) k^ℓ)] = Σ_{i<ℓ} ln(1 + i/k), exact for integer ℓ.
    fn ln_rising_over_power(&self) -> T {
        (0..self.ell).fold(T::zero(), |acc, i| acc + (order_as::<T>(i) / self.k).ln_1p())
    }

    pub fn ln_pdf(&self, r: T) -> Result<T> {
        if !(r > T::zero()) {
            return domain(format!("distance must be positive, got {r}"));
        }
        let a = self.scale();
        let ell = self.ell_t();
        let m = a * r * r;
        Ok(T::LN_2() + ell * a.ln() + (T::lit(2.0) * ell - T::one()) * r.ln()
            + self.ln_rising_over_power()
            - specfun::ln_gamma(ell)?
            - (ell + self.k) * (m / self.k).ln_1p())
    }

    pub fn pdf(&self, r: T) -> Result<T> {
        Ok(self.ln_pdf(r)?.exp())
    }

    // (w, 1 − w) with w = a r² / (a r² + k), both without cancellation.
    fn beta_argument(&self, r: T) -> (T, T) {
        let m = self.scale() * r * r;
        let denom = m + self.k;
        (m / denom, self.k / denom)
    }

    /// P(R ≤ r) = I_w(ℓ, k), w = πλr² / (πλr² + qk).
    pub fn cdf(&self, r: T) -> Result<T> {
        if r.is_nan() || r < T::zero() {
            return domain(format!("distance must be nonnegative, got {r}"));
        }
        let (w, w_c) = self.beta_argument(r);
        let b = inc_beta_split(w, w_c, self.ell_t(), self.k, &ToleranceConfig::default())?;
        Ok(b.value)
    }

    /// ln P(R > r) through the finite negative-binomial sum
    /// P(N < ℓ) = Σ_{j<ℓ} Γ(k + j) / (Γ(k) j!) w^j (1 − w)^k,
    /// which equals 1 − I_w(ℓ, k) for integer ℓ and stays exact as k → ∞.
    pub fn ln_survival(&self, r: T) -> Result<T> {
        if r.is_nan() || r < T::zero() {
            return domain(format!("distance must be nonnegative, got {r}"));
        }
        let m = self.scale() * r * r;
        if m == T::zero() {
            return Ok(T::zero());
        }
        let k = self.k;
        let ln_w = (m / (m + k)).ln();
        let ln_base = -k * (m / k).ln_1p();
        let mut ln_term = ln_base;
        let mut max = ln_term;
        let mut terms = Vec::with_capacity(self.ell as usize);
        terms.push(ln_term);
        for j in 1..self.ell {
            let jt = order_as::<T>(j);
            ln_term = ln_term + (k + jt - T::one()).ln() - jt.ln() + ln_w;
            max = max.max(ln_term);
            terms.push(ln_term);
        }
        if max == T::neg_infinity() {
            return Ok(max);
        }
        let sum = terms.iter().fold(T::zero(), |acc, &t| acc + (t - max).exp());
        Ok(max + sum.ln())
    }

    fn check_order(&self, u: T) -> Result<(T, T)> {
        let half_u = u / T::lit(2.0);
        let alpha = self.ell_t() + half_u;
        let beta = self.k - half_u;
        if !(alpha > T::zero() && beta > T::zero()) {
            return domain(format!(
                "moment order u = {u} must satisfy -2ℓ < u < 2k (ℓ = {}, k = {})",
                self.ell, self.k
            ));
        }
        Ok((alpha, beta))
    }

    /// E[R^u] = (k/a)^{u/2} Γ(ℓ + u/2) Γ(k − u/2) / (Γ(ℓ) Γ(k)), −2ℓ < u < 2k.
    pub fn moment(&self, u: T) -> Result<T> {
        self.check_order(u)?;
        let half_u = u / T::lit(2.0);
        let ln_m = half_u * (self.k / self.scale()).ln()
            + specfun::ln_gamma_ratio(self.ell_t(), half_u)?
            + specfun::ln_gamma_ratio(self.k, -half_u)?;
        Ok(ln_m.exp())
    }

    /// E[R^u | R > C] = E[R^u] · (1 − I_w(ℓ + u/2, k − u/2)) / (1 − I_w(ℓ, k)).
    pub fn truncated_moment_upper(&self, u: T, c: T) -> Result<T> {
        let (alpha, beta) = self.check_order(u)?;
        if !(c >= T::zero()) {
            return domain(format!("truncation radius must be nonnegative, got {c}"));
        }
        let (w, w_c) = self.beta_argument(c);
        let tol = ToleranceConfig::default();
        let denom = inc_beta_split(w, w_c, self.ell_t(), self.k, &tol)?;
        if denom.ln_complement < T::tiny_probability().ln() {
            return Err(ModelError::Numeric(format!(
                "P(R > C) = exp({}) underflows; conditional moment beyond C is undefined",
                denom.ln_complement
            )));
        }
        let numer = inc_beta_split(w, w_c, alpha, beta, &tol)?;
        Ok(self.moment(u)? * (numer.ln_complement - denom.ln_complement).exp())
    }

    /// E[R^u | R ≤ C] = E[R^u] · I_w(ℓ + u/2, k − u/2) / I_w(ℓ, k).
    pub fn truncated_moment_lower(&self, u: T, c: T) -> Result<T> {
        let (alpha, beta) = self.check_order(u)?;
        if !(c > T::zero()) {
            return domain(format!("truncation radius must be positive, got {c}"));
        }
        let (w, w_c) = self.beta_argument(c);
        let tol = ToleranceConfig::default();
        let denom = inc_beta_split(w, w_c, self.ell_t(), self.k, &tol)?;
        if denom.value == T::zero() {
            return Err(ModelError::Numeric("P(R <= C) is zero".into()));
        }
        let numer = inc_beta_split(w, w_c, alpha, beta, &tol)?;
        Ok(self.moment(u)? * (numer.ln_value - denom.ln_value).exp())
    }
}

/// First-order coefficient Δ₁ in
/// E[R^u | R > C; k] = E[R^u | R > C; k = ∞] + Δ₁/k + O(1/k²).
///
/// With a = πλ/q, α = ℓ + u/2, T = aC² and G(s) = Γ(s, T):
/// Δ₁ = a^{−u/2} [−ℓ G(α+1)G(ℓ) + ½G(α+2)G(ℓ) + ℓ G(α)G(ℓ+1) − ½G(α)G(ℓ+2)] / G(ℓ)².
/// Evaluated as a^{−u/2} G(α)/G(ℓ) times ratios G(s+j)/G(s) to stay finite.
pub fn delta1<T: Scalar>(ell: u32, u: T, lambda: T, q: u32, c: T) -> Result<T> {
    let model = CsrModel::new(lambda, q, ell)?;
    let alpha = model.check_order(u)?;
    let a = model.scale();
    let t = a * c * c;
    if !(t > T::zero() && t.is_finite()) {
        return domain(format!("aC² must be positive and finite, got {t}"));
    }
    let ln_g = |s: T| specfun::ln_upper_inc_gamma(s, t);
    let ell_t = model.ell_t();
    let g_alpha = ln_g(alpha)?;
    let g_ell = ln_g(ell_t)?;
    let r1 = (ln_g(alpha + T::one())? - g_alpha).exp();
    let r2 = (ln_g(alpha + T::lit(2.0))? - g_alpha).exp();
    let s1 = (ln_g(ell_t + T::one())? - g_ell).exp();
    let s2 = (ln_g(ell_t + T::lit(2.0))? - g_ell).exp();
    let half = T::lit(0.5);
    let bracket = -ell_t * r1 + half * r2 + ell_t * s1 - half * s2;
    Ok((-(u * half) * a.ln() + g_alpha - g_ell).exp() * bracket)
}

/// Large-sample biases of the two censoring adjustments of the u-th moment
/// when the data follow an NBD model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticBias<T> {
    /// B(M_u): Poisson moment correction driven by the censoring rate.
    pub poisson_correction: T,
    /// B(Ê[R^u]): CSR-imputed censored moments with the Pollard-type λ_init.
    pub nbd_imputation: T,
    /// Censoring probability P(R > C) under the model.
    pub p0: T,
    /// Limit of the initial density estimate, ℓq / (π M₂^∞).
    pub lambda_init: T,
}

impl<T: Scalar> AsymptoticBias<T> {
    pub fn imputation_dominates(&self) -> bool {
        self.nbd_imputation.abs() < self.poisson_correction.abs()
    }
}

/// Asymptotic biases B(M_u) and B(Ê[R^u]) relative to the uncensored NBD
/// moment μ_u, as the number of sampled sectors grows without bound.
pub fn asymptotic_bias_pair<T: Scalar>(
    m: &NbdModel<T>,
    u: T,
    c: T,
) -> Result<AsymptoticBias<T>> {
    if !(m.k > T::one()) {
        return domain(format!(
            "second-moment limit requires k > 1, got k = {}",
            m.k
        ));
    }
    m.check_order(u)?;
    if !(c > T::zero()) {
        return domain(format!("truncation radius must be positive, got {c}"));
    }
    let p0 = m.ln_survival(c)?.exp();
    if u == T::zero() {
        let lambda_init = m.ell_t() * order_as::<T>(m.q) / (T::PI() * m.moment(T::lit(2.0))?);
        return Ok(AsymptoticBias {
            poisson_correction: T::zero(),
            nbd_imputation: T::zero(),
            p0,
            lambda_init,
        });
    }
    let mu = m.moment(u)?;
    let ell_t = m.ell_t();
    let two = T::lit(2.0);
    let m_c = match specfun::solve_m_c(m.ell, p0) {
        Ok(v) => v,
        Err(SpecialError::Uncensored) => {
            let lambda_init = ell_t * order_as::<T>(m.q) / (T::PI() * m.moment(two)?);
            return Ok(AsymptoticBias {
                poisson_correction: T::zero(),
                nbd_imputation: T::zero(),
                p0,
                lambda_init,
            });
        }
        Err(e) => return Err(e.into()),
    };
    let tol = ToleranceConfig::default();
    let adjusted = |order: T| -> Result<T> {
        let lower = m.truncated_moment_lower(order, c)?;
        let p = inc_gamma(ell_t + order / two, m_c, &tol)?.p;
        Ok(lower * (T::one() - p0) / p)
    };
    let m_u = adjusted(u)?;
    let m_2 = adjusted(two)?;
    let lambda_init = ell_t * order_as::<T>(m.q) / (T::PI() * m_2);
    let csr = CsrModel::new(lambda_init, m.q, m.ell)?;
    // p₀ · E_CSR[R^u | R > C] in log space: the CSR tail at λ_init can be far
    // smaller than the NBD tail p₀.
    let (ln_imputed, _) = csr.ln_truncated_upper(u, c)?;
    let e_hat = (T::one() - p0) * m.truncated_moment_lower(u, c)? + (p0.ln() + ln_imputed).exp();
    Ok(AsymptoticBias {
        poisson_correction: m_u - mu,
        nbd_imputation: e_hat - mu,
        p0,
        lambda_init,
    })
}
