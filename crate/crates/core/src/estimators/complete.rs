//! Estimators for uncensored samples.

use super::likelihood::fit_nbd;
use super::sample::DistanceSample;
use super::{DensityEstimate, EstimatorError, EstimatorId, Result};
use crate::Scalar;

pub(super) fn require_complete<T: Scalar>(s: &DistanceSample<T>, what: &'static str) -> Result<()> {
    let n0 = s.n0();
    if n0 > 0 {
        return Err(EstimatorError::Precondition {
            what,
            reason: format!("{n0} censored sectors; use a censored-data estimator"),
        });
    }
    Ok(())
}

fn count<T: Scalar>(n: usize) -> T {
    T::from_count(n)
}

fn int<T: Scalar>(n: u32) -> T {
    T::from_u32(n).expect("small integer")
}

/// Cottam-type estimator qℓ / (4 r̄²).
pub fn cottam<T: Scalar>(s: &DistanceSample<T>) -> Result<DensityEstimate<T>> {
    require_complete(s, "cottam")?;
    let mean = s.power_sum(T::one()) / count(s.nq());
    let lambda = int::<T>(s.q()) * int(s.ell()) / (T::lit(4.0) * mean * mean);
    Ok(DensityEstimate::new(EstimatorId::Cottam, lambda))
}

/// Pollard estimator q(nqℓ − 1) / (π Σ r²).
pub fn pollard<T: Scalar>(s: &DistanceSample<T>) -> Result<DensityEstimate<T>> {
    require_complete(s, "pollard")?;
    let m = s.nq() * s.ell() as usize;
    if m <= 1 {
        return Err(EstimatorError::Precondition {
            what: "pollard",
            reason: "nqℓ must exceed 1".into(),
        });
    }
    let lambda = int::<T>(s.q()) * (count::<T>(m) - T::one()) / (T::PI() * s.power_sum(T::lit(2.0)));
    Ok(DensityEstimate::new(EstimatorId::Pollard, lambda))
}

/// Poisson maximum likelihood estimator nq²ℓ / (π Σ r²).
pub fn csr_mle_complete<T: Scalar>(s: &DistanceSample<T>) -> Result<DensityEstimate<T>> {
    require_complete(s, "csr-mle")?;
    Ok(DensityEstimate::new(EstimatorId::CsrMle, csr_mle_closed_form(s)))
}

pub(super) fn csr_mle_closed_form<T: Scalar>(s: &DistanceSample<T>) -> T {
    int::<T>(s.q()) * count::<T>(s.nq()) * int(s.ell()) / (T::PI() * s.power_sum(T::lit(2.0)))
}

/// Morisita's first estimator (ℓ − 1)/(πn) Σ r⁻²; requires ℓ > 1.
pub fn morisita_m1<T: Scalar>(s: &DistanceSample<T>) -> Result<DensityEstimate<T>> {
    require_complete(s, "morisita-m1")?;
    if s.ell() < 2 {
        return Err(EstimatorError::NotApplicable {
            what: "morisita-m1",
            reason: "requires neighbor order ℓ > 1".into(),
        });
    }
    let lambda = (int::<T>(s.ell()) - T::one()) / (T::PI() * count(s.n())) * s.power_sum(-T::lit(2.0));
    Ok(DensityEstimate::new(EstimatorId::MorisitaM1, lambda))
}

/// Morisita's second estimator (ℓq − 1)/(πn) Σᵢ q / Σⱼ rᵢⱼ².
pub fn morisita_m2<T: Scalar>(s: &DistanceSample<T>) -> Result<DensityEstimate<T>> {
    require_complete(s, "morisita-m2")?;
    let lq = s.ell() * s.q();
    if lq <= 1 {
        return Err(EstimatorError::Precondition {
            what: "morisita-m2",
            reason: "ℓq must exceed 1".into(),
        });
    }
    let q = int::<T>(s.q());
    let total = s.points().fold(T::zero(), |acc, point| {
        let ss = point
            .iter()
            .filter_map(|c| c.distance())
            .fold(T::zero(), |a, r| a + r * r);
        acc + q / ss
    });
    let lambda = (int::<T>(lq) - T::one()) / (T::PI() * count(s.n())) * total;
    Ok(DensityEstimate::new(EstimatorId::MorisitaM2, lambda))
}

pub(super) fn shen_from_moments<T: Scalar>(q: u32, ell: u32, e_inv: T, e1: T, e2: T) -> T {
    let q = int::<T>(q);
    let ell = int::<T>(ell);
    q * (T::lit(2.0) * ell - T::one()) * e_inv / (T::PI() * e1) - q * ell / (T::PI() * e2)
}

/// NBD moment estimator q(2ℓ−1) Σr⁻¹ / (π Σr) − nq²ℓ / (π Σr²). Non-positive
/// values are returned flagged invalid.
pub fn shen<T: Scalar>(s: &DistanceSample<T>) -> Result<DensityEstimate<T>> {
    require_complete(s, "shen")?;
    let nq = count::<T>(s.nq());
    let lambda = shen_from_moments(
        s.q(),
        s.ell(),
        s.power_sum(-T::one()) / nq,
        s.power_sum(T::one()) / nq,
        s.power_sum(T::lit(2.0)) / nq,
    );
    Ok(DensityEstimate::new(EstimatorId::Shen, lambda))
}

/// Moment estimator of the NBD aggregation parameter,
/// k̂ = 1 − ℓ Σr / (Σr⁻¹ Σr² (1 − 2ℓ)/(nq) + ℓ Σr).
/// The density reported alongside is the [`shen`] estimate.
pub fn shen_k<T: Scalar>(s: &DistanceSample<T>) -> Result<DensityEstimate<T>> {
    require_complete(s, "shen-k")?;
    let ell = int::<T>(s.ell());
    let s1 = s.power_sum(T::one());
    let s_inv = s.power_sum(-T::one());
    let s2 = s.power_sum(T::lit(2.0));
    let cross = s_inv * s2 * (T::one() - T::lit(2.0) * ell) / count(s.nq());
    let denom = cross + ell * s1;
    let scale = cross.abs().max((ell * s1).abs());
    if denom.abs() <= T::lit(64.0) * T::epsilon() * scale {
        return Err(EstimatorError::Degenerate {
            what: "shen-k",
            reason: "denominator vanishes (distances show no dispersion)".into(),
        });
    }
    let k = T::one() - ell * s1 / denom;
    let lambda = shen(s)?.lambda_hat;
    let mut est = DensityEstimate {
        lambda_hat: lambda,
        k_hat: Some(k),
        estimator: EstimatorId::ShenK,
        valid: true,
        warnings: Vec::new(),
    };
    if !(k > T::zero() && k.is_finite()) {
        est.valid = false;
        est.warnings.push(format!("aggregation estimate {k} is not positive and finite"));
    }
    Ok(est)
}

/// Joint NBD maximum likelihood estimate of (λ, k).
pub fn nbd_mle_complete<T: Scalar>(s: &DistanceSample<T>) -> Result<DensityEstimate<T>> {
    require_complete(s, "nbd-mle")?;
    Ok(fit_nbd(s, "nbd-mle")?.relabel(EstimatorId::NbdMle))
}
