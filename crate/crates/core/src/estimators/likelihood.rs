//! Censored log-likelihoods under the CSR and NBD distance models and the
//! joint NBD fit shared by the complete and censored MLEs.

use super::censored::{csr_mle_censored, pollard_censored};
use super::complete::shen_k;
use super::sample::DistanceSample;
use super::{DensityEstimate, EstimatorError, EstimatorId, Result};
use crate::model::{CsrModel, NbdModel};
use crate::optimize::maximize_2d;
use crate::specfun::ln_gamma;
use crate::Scalar;

/// Fitted aggregation above this value is reported as k̂ = +∞: the
/// likelihood is flat in k and the data are consistent with CSR.
pub const K_SENTINEL_THRESHOLD: f64 = 1e6;

/// k is capped here inside the objective so the simplex cannot wander off to
/// infinity along the flat direction.
const K_CAP: f64 = 1e9;

const FIT_TOL: f64 = 1e-10;

fn int<T: Scalar>(n: u32) -> T {
    T::from_u32(n).expect("small integer")
}

/// Compensated (Neumaier) sum.
#[derive(Default, Clone, Copy)]
struct Accumulator<T> {
    sum: T,
    comp: T,
}

impl<T: Scalar> Accumulator<T> {
    fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp = self.comp + ((self.sum - t) + x);
        } else {
            self.comp = self.comp + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    fn total(&self) -> T {
        self.sum + self.comp
    }
}

/// Sufficient pieces of a sample reused across likelihood evaluations.
pub(super) struct LikelihoodData<T> {
    q: u32,
    ell: u32,
    radius: T,
    n0: usize,
    r2: Vec<T>,
    sum_ln_r: T,
    sum_r2: T,
}

impl<T: Scalar> LikelihoodData<T> {
    pub(super) fn new(s: &DistanceSample<T>) -> Self {
        let r2: Vec<T> = s.observed().map(|r| r * r).collect();
        let mut ln_acc = Accumulator::default();
        let mut sq_acc = Accumulator::default();
        for r in s.observed() {
            ln_acc.add(r.ln());
            sq_acc.add(r * r);
        }
        Self {
            q: s.q(),
            ell: s.ell(),
            radius: s.radius(),
            n0: s.n0(),
            r2,
            sum_ln_r: ln_acc.total(),
            sum_r2: sq_acc.total(),
        }
    }

    fn common(&self, a: T) -> Result<T> {
        let ell = int::<T>(self.ell);
        let lg = ln_gamma(ell).map_err(|source| EstimatorError::Special {
            what: "log-likelihood",
            source,
        })?;
        let n_obs = T::from_count(self.r2.len());
        Ok(n_obs * (T::LN_2() + ell * a.ln() - lg)
            + (T::lit(2.0) * ell - T::one()) * self.sum_ln_r)
    }

    pub(super) fn csr(&self, lambda: T) -> Result<T> {
        let model = CsrModel::new(lambda, self.q, self.ell).map_err(|source| EstimatorError::Model {
            what: "csr log-likelihood",
            source,
        })?;
        let a = model.scale();
        let mut ll = self.common(a)? - a * self.sum_r2;
        if self.n0 > 0 {
            let ln_s = model.ln_survival(self.radius).map_err(|source| EstimatorError::Model {
                what: "csr log-likelihood",
                source,
            })?;
            ll = ll + T::from_count(self.n0) * ln_s;
        }
        Ok(ll)
    }

    pub(super) fn nbd(&self, lambda: T, k: T) -> Result<T> {
        let model = NbdModel::new(lambda, k, self.q, self.ell).map_err(|source| EstimatorError::Model {
            what: "nbd log-likelihood",
            source,
        })?;
        let a = model.scale();
        let ell = int::<T>(self.ell);
        let mut ratio = T::zero();
        for i in 1..self.ell {
            ratio = ratio + (int::<T>(i) / k).ln_1p();
        }
        let mut acc = Accumulator::default();
        for &r2 in &self.r2 {
            acc.add((a * r2 / k).ln_1p());
        }
        let n_obs = T::from_count(self.r2.len());
        let mut ll = self.common(a)? + n_obs * ratio - (ell + k) * acc.total();
        if self.n0 > 0 {
            let ln_s = model.ln_survival(self.radius).map_err(|source| EstimatorError::Model {
                what: "nbd log-likelihood",
                source,
            })?;
            ll = ll + T::from_count(self.n0) * ln_s;
        }
        Ok(ll)
    }
}

/// Log of the censored CSR likelihood Π f(r′) · P(R > C)^{n₀}.
pub fn csr_log_likelihood<T: Scalar>(s: &DistanceSample<T>, lambda: T) -> Result<T> {
    LikelihoodData::new(s).csr(lambda)
}

/// Log of the censored NBD likelihood Π g(r′) · (1 − I_w(ℓ, k))^{n₀}.
pub fn nbd_log_likelihood<T: Scalar>(s: &DistanceSample<T>, lambda: T, k: T) -> Result<T> {
    LikelihoodData::new(s).nbd(lambda, k)
}

fn warm_start_k<T: Scalar>(s: &DistanceSample<T>) -> T {
    if s.n0() == 0 {
        if let Ok(est) = shen_k(s) {
            if est.valid {
                if let Some(k) = est.k_hat {
                    return k.max(T::lit(0.5));
                }
            }
        }
    }
    T::lit(2.0)
}

/// Maximizes the NBD likelihood over (ln λ, ln k).
pub(super) fn fit_nbd<T: Scalar>(s: &DistanceSample<T>, what: &'static str) -> Result<DensityEstimate<T>> {
    if s.n0() == s.nq() {
        return Err(EstimatorError::AllCensored { what });
    }
    let lambda0 = pollard_censored(s)?.lambda_hat;
    if !(lambda0 > T::zero() && lambda0.is_finite()) {
        return Err(EstimatorError::Degenerate {
            what,
            reason: format!("starting density {lambda0} is unusable"),
        });
    }
    let k0 = warm_start_k(s);
    let data = LikelihoodData::new(s);
    let cap = T::lit(K_CAP).ln();
    let objective = |x: &[T; 2]| {
        data.nbd(x[0].exp(), x[1].min(cap).exp())
            .unwrap_or(T::neg_infinity())
    };
    let res = maximize_2d(objective, [lambda0.ln(), k0.ln()], T::lit(FIT_TOL))
        .map_err(|source| EstimatorError::Optimization { what, source })?;
    let ln_k = res.argmax[1];
    if ln_k > T::lit(K_SENTINEL_THRESHOLD.ln()) {
        let csr = csr_mle_censored(s)?;
        let mut est = DensityEstimate::new(EstimatorId::NbdMleCensored, csr.lambda_hat);
        est.k_hat = Some(T::infinity());
        est.warnings
            .push("likelihood is flat in k; data are consistent with CSR".into());
        return Ok(est);
    }
    let mut est = DensityEstimate::new(EstimatorId::NbdMleCensored, res.argmax[0].exp());
    est.k_hat = Some(ln_k.exp());
    Ok(est)
}
