//! Estimators for samples right-censored at the search radius C.

use super::complete::{csr_mle_closed_form, shen_from_moments};
use super::likelihood::{fit_nbd, LikelihoodData};
use super::sample::DistanceSample;
use super::{
    cottam, AdjustedMoment, AdjustmentMethod, DensityEstimate, EstimatorError, EstimatorId, Result,
};
use crate::model::CsrModel;
use crate::optimize::maximize_1d;
use crate::specfun::{lower_inc_gamma, reg_lower_inc_gamma, solve_m_c};
use crate::Scalar;

fn int<T: Scalar>(n: u32) -> T {
    T::from_u32(n).expect("small integer")
}

fn require_observed<T: Scalar>(s: &DistanceSample<T>, what: &'static str) -> Result<()> {
    if s.n0() == s.nq() {
        return Err(EstimatorError::AllCensored { what });
    }
    Ok(())
}

fn require_first_neighbor<T: Scalar>(s: &DistanceSample<T>, what: &'static str) -> Result<()> {
    if s.ell() != 1 {
        return Err(EstimatorError::NotApplicable {
            what,
            reason: format!("defined for ℓ = 1 only, got ℓ = {}", s.ell()),
        });
    }
    Ok(())
}

fn check_order<T: Scalar>(s: &DistanceSample<T>, u: T, what: &'static str) -> Result<()> {
    if !(u > -T::lit(2.0) * int(s.ell())) || !u.is_finite() {
        return Err(EstimatorError::Precondition {
            what,
            reason: format!("moment order u = {u} requires u > -2ℓ"),
        });
    }
    Ok(())
}

fn mean_observed<T: Scalar>(s: &DistanceSample<T>) -> T {
    s.power_sum(T::one()) / T::from_count(s.nq() - s.n0())
}

/// Censoring-adjusted moment M_u: the observed-sector moment divided by the
/// Poisson truncation factor P(ℓ + u/2, m̂_C), where m̂_C reproduces the
/// observed censoring rate. Uncensored samples give the plain moment.
pub fn adjusted_moment_poisson<T: Scalar>(s: &DistanceSample<T>, u: T) -> Result<AdjustedMoment<T>> {
    const WHAT: &str = "poisson-adjusted moment";
    require_observed(s, WHAT)?;
    check_order(s, u, WHAT)?;
    let moment = |value| AdjustedMoment {
        u,
        value,
        method: AdjustmentMethod::PoissonCorrection,
        lambda_init: None,
    };
    if u == T::zero() {
        return Ok(moment(T::one()));
    }
    let raw = s.power_sum(u) / T::from_count(s.nq());
    if s.n0() == 0 {
        return Ok(moment(raw));
    }
    let special = |source| EstimatorError::Special { what: WHAT, source };
    let m_c = solve_m_c(s.ell(), s.p0()).map_err(special)?;
    let order = int::<T>(s.ell()) + u / T::lit(2.0);
    let p = reg_lower_inc_gamma(order, m_c).map_err(special)?;
    Ok(moment(raw / p))
}

/// Imputed moment Ê[R^u]: each censored sector contributes the CSR
/// conditional moment E[R^u | R > C] at density `lambda_init`.
pub fn adjusted_moment_nbd<T: Scalar>(
    s: &DistanceSample<T>,
    u: T,
    lambda_init: T,
) -> Result<AdjustedMoment<T>> {
    const WHAT: &str = "imputed moment";
    require_observed(s, WHAT)?;
    check_order(s, u, WHAT)?;
    if !(lambda_init > T::zero() && lambda_init.is_finite()) {
        return Err(EstimatorError::Precondition {
            what: WHAT,
            reason: format!("initial density must be positive and finite, got {lambda_init}"),
        });
    }
    let moment = |value| AdjustedMoment {
        u,
        value,
        method: AdjustmentMethod::NbdImputation,
        lambda_init: Some(lambda_init),
    };
    if u == T::zero() {
        return Ok(moment(T::one()));
    }
    let mut total = s.power_sum(u);
    if s.n0() > 0 {
        let model = CsrModel::new(lambda_init, s.q(), s.ell())
            .and_then(|m| m.truncated_moment_upper(u, s.radius()))
            .map_err(|source| EstimatorError::Model { what: WHAT, source })?;
        total = total + T::from_count(s.n0()) * model;
    }
    Ok(moment(total / T::from_count(s.nq())))
}

/// Warde–Petran correction of the Cottam estimator for ℓ = 1:
/// q γ(3/2, −ln p₀)² / (π r̄′² (1 − p₀)²), r̄′ the mean observed distance.
pub fn warde_petran<T: Scalar>(s: &DistanceSample<T>) -> Result<DensityEstimate<T>> {
    const WHAT: &str = "warde-petran";
    require_first_neighbor(s, WHAT)?;
    require_observed(s, WHAT)?;
    if s.n0() == 0 {
        return Ok(cottam(s)?.relabel(EstimatorId::WardePetran));
    }
    let p0 = s.p0();
    let g = lower_inc_gamma(T::lit(1.5), -p0.ln())
        .map_err(|source| EstimatorError::Special { what: WHAT, source })?;
    let mean = mean_observed(s);
    let one_minus = T::one() - p0;
    let lambda = int::<T>(s.q()) * g * g / (T::PI() * mean * mean * one_minus * one_minus);
    Ok(DensityEstimate::new(EstimatorId::WardePetran, lambda))
}

/// Dahdouh-Guebas–Koedam correction q(1 − p₀) / (4 r̄′²), ℓ = 1 only.
pub fn dahdouh_koedam<T: Scalar>(s: &DistanceSample<T>) -> Result<DensityEstimate<T>> {
    const WHAT: &str = "dahdouh-koedam";
    require_first_neighbor(s, WHAT)?;
    require_observed(s, WHAT)?;
    let mean = mean_observed(s);
    let lambda = int::<T>(s.q()) * (T::one() - s.p0()) / (T::lit(4.0) * mean * mean);
    Ok(DensityEstimate::new(EstimatorId::DahdouhKoedam, lambda))
}

/// Censored Cottam estimator qℓ / (4 M₁²).
pub fn cottam_censored<T: Scalar>(s: &DistanceSample<T>) -> Result<DensityEstimate<T>> {
    let m1 = adjusted_moment_poisson(s, T::one())?.value;
    let lambda = int::<T>(s.q()) * int(s.ell()) / (T::lit(4.0) * m1 * m1);
    Ok(DensityEstimate::new(EstimatorId::CottamCensored, lambda))
}

/// Censored Pollard estimator (nqℓ − 1) / (πn M₂).
pub fn pollard_censored<T: Scalar>(s: &DistanceSample<T>) -> Result<DensityEstimate<T>> {
    const WHAT: &str = "pollard-censored";
    let m = s.nq() * s.ell() as usize;
    if m <= 1 {
        return Err(EstimatorError::Precondition {
            what: WHAT,
            reason: "nqℓ must exceed 1".into(),
        });
    }
    let m2 = adjusted_moment_poisson(s, T::lit(2.0))?.value;
    let lambda = (T::from_count(m) - T::one()) / (T::PI() * T::from_count(s.n()) * m2);
    Ok(DensityEstimate::new(EstimatorId::PollardCensored, lambda))
}

/// Censored CSR maximum likelihood estimator. Closed form for ℓ = 1 and for
/// uncensored samples; numerical maximization otherwise.
pub fn csr_mle_censored<T: Scalar>(s: &DistanceSample<T>) -> Result<DensityEstimate<T>> {
    const WHAT: &str = "csr-mle-censored";
    if s.n0() == 0 {
        return Ok(DensityEstimate::new(
            EstimatorId::CsrMleCensored,
            csr_mle_closed_form(s),
        ));
    }
    if s.ell() == 1 {
        let q = int::<T>(s.q());
        let c = s.radius();
        let n_obs = T::from_count(s.nq() - s.n0());
        let lambda =
            q * n_obs / (T::PI() * (s.power_sum(T::lit(2.0)) + T::from_count(s.n0()) * c * c));
        let mut est = DensityEstimate::new(EstimatorId::CsrMleCensored, lambda);
        if s.n0() == s.nq() {
            est.warnings.push("every sector is censored".into());
        }
        return Ok(est);
    }
    require_observed(s, WHAT)?;
    csr_mle_censored_numeric(s)
}

/// Censored CSR MLE by golden-section search over ln λ for any ℓ, bracketed
/// by [λ₀/100, 100 λ₀] around the censored Pollard estimate λ₀.
pub fn csr_mle_censored_numeric<T: Scalar>(s: &DistanceSample<T>) -> Result<DensityEstimate<T>> {
    const WHAT: &str = "csr-mle-censored";
    require_observed(s, WHAT)?;
    let lambda0 = pollard_censored(s)?.lambda_hat;
    if !(lambda0 > T::zero() && lambda0.is_finite()) {
        return Err(EstimatorError::Degenerate {
            what: WHAT,
            reason: format!("starting density {lambda0} is unusable"),
        });
    }
    let data = LikelihoodData::new(s);
    let spread = T::lit(100.0).ln();
    let centre = lambda0.ln();
    let res = maximize_1d(
        |theta: T| data.csr(theta.exp()).unwrap_or(T::neg_infinity()),
        (centre - spread, centre + spread),
        T::lit(1e-10),
    )
    .map_err(|source| EstimatorError::Optimization { what: WHAT, source })?;
    let mut est = DensityEstimate::new(EstimatorId::CsrMleCensored, res.argmax[0].exp());
    if !res.converged {
        est.warnings
            .push("likelihood maximum reached the search bracket edge".into());
    }
    Ok(est)
}

fn initial_density<T: Scalar>(s: &DistanceSample<T>, lambda_init: Option<T>) -> Result<T> {
    match lambda_init {
        Some(l) => Ok(l),
        None => Ok(pollard_censored(s)?.lambda_hat),
    }
}

/// Censored NBD moment estimator built on the imputed moments Ê[R⁻¹], Ê[R],
/// Ê[R²]. `lambda_init` defaults to the censored Pollard estimate.
pub fn shen_censored<T: Scalar>(
    s: &DistanceSample<T>,
    lambda_init: Option<T>,
) -> Result<DensityEstimate<T>> {
    require_observed(s, "shen-censored")?;
    let init = initial_density(s, lambda_init)?;
    let e = |u: f64| adjusted_moment_nbd(s, T::lit(u), init).map(|m| m.value);
    let lambda = shen_from_moments(s.q(), s.ell(), e(-1.0)?, e(1.0)?, e(2.0)?);
    Ok(DensityEstimate::new(EstimatorId::ShenCensored, lambda))
}

/// Censored Morisita estimator q(ℓ − 1)/π · Ê[R⁻²]; requires ℓ > 1.
pub fn morisita_censored<T: Scalar>(
    s: &DistanceSample<T>,
    lambda_init: Option<T>,
) -> Result<DensityEstimate<T>> {
    const WHAT: &str = "morisita-censored";
    if s.ell() < 2 {
        return Err(EstimatorError::NotApplicable {
            what: WHAT,
            reason: "requires neighbor order ℓ > 1".into(),
        });
    }
    require_observed(s, WHAT)?;
    let init = initial_density(s, lambda_init)?;
    let e = adjusted_moment_nbd(s, -T::lit(2.0), init)?.value;
    let lambda = int::<T>(s.q()) * (int::<T>(s.ell()) - T::one()) / T::PI() * e;
    Ok(DensityEstimate::new(EstimatorId::MorisitaCensored, lambda))
}

/// Joint censored NBD maximum likelihood estimate of (λ, k).
pub fn nbd_mle_censored<T: Scalar>(s: &DistanceSample<T>) -> Result<DensityEstimate<T>> {
    fit_nbd(s, "nbd-mle-censored")
}
