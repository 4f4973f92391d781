//! Density estimators for PCQM distance samples.
//!
//! Complete-data estimators require every sector to be observed; the censored
//! estimators accept sectors recorded only as "beyond the search radius" and
//! reduce to their complete-data counterparts when nothing is censored.

mod censored;
mod complete;
mod likelihood;
mod sample;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ModelError;
use crate::optimize::OptimError;
use crate::specfun::SpecialError;
use crate::Scalar;

pub use censored::{
    adjusted_moment_nbd, adjusted_moment_poisson, cottam_censored, csr_mle_censored,
    csr_mle_censored_numeric, dahdouh_koedam, morisita_censored, nbd_mle_censored,
    pollard_censored, shen_censored, warde_petran,
};
pub use complete::{
    cottam, csr_mle_complete, morisita_m1, morisita_m2, nbd_mle_complete, pollard, shen, shen_k,
};
pub use likelihood::{csr_log_likelihood, nbd_log_likelihood, K_SENTINEL_THRESHOLD};
pub use sample::{read_sample_csv, write_sample_csv, DistanceSample, Observation, SampleError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("{what}: precondition violated: {reason}")]
    Precondition { what: &'static str, reason: String },
    #[error("{what} is not applicable: {reason}")]
    NotApplicable { what: &'static str, reason: String },
    #[error("{what}: every sector is censored")]
    AllCensored { what: &'static str },
    #[error("{what}: degenerate sample: {reason}")]
    Degenerate { what: &'static str, reason: String },
    #[error("{what}: {source}")]
    Model {
        what: &'static str,
        source: ModelError,
    },
    #[error("{what}: {source}")]
    Special {
        what: &'static str,
        source: SpecialError,
    },
    #[error("{what}: optimization failed: {source}")]
    Optimization {
        what: &'static str,
        source: OptimError,
    },
}

impl EstimatorError {
    /// True for requests the estimator does not support at all (as opposed to
    /// data or numeric failures).
    pub fn is_not_applicable(&self) -> bool {
        matches!(self, EstimatorError::NotApplicable { .. })
    }

    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            EstimatorError::Model { .. }
                | EstimatorError::Special { .. }
                | EstimatorError::Optimization { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, EstimatorError>;

/// Every estimator the crate implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorId {
    Cottam,
    Pollard,
    CsrMle,
    MorisitaM1,
    MorisitaM2,
    Shen,
    ShenK,
    NbdMle,
    WardePetran,
    DahdouhKoedam,
    CottamCensored,
    PollardCensored,
    CsrMleCensored,
    ShenCensored,
    MorisitaCensored,
    NbdMleCensored,
}

impl EstimatorId {
    pub const ALL: [EstimatorId; 16] = [
        EstimatorId::Cottam,
        EstimatorId::Pollard,
        EstimatorId::CsrMle,
        EstimatorId::MorisitaM1,
        EstimatorId::MorisitaM2,
        EstimatorId::Shen,
        EstimatorId::ShenK,
        EstimatorId::NbdMle,
        EstimatorId::WardePetran,
        EstimatorId::DahdouhKoedam,
        EstimatorId::CottamCensored,
        EstimatorId::PollardCensored,
        EstimatorId::CsrMleCensored,
        EstimatorId::ShenCensored,
        EstimatorId::MorisitaCensored,
        EstimatorId::NbdMleCensored,
    ];

    /// Complete-data estimators, in reporting order.
    pub const COMPLETE_SET: [EstimatorId; 8] = [
        EstimatorId::Cottam,
        EstimatorId::Pollard,
        EstimatorId::CsrMle,
        EstimatorId::MorisitaM1,
        EstimatorId::MorisitaM2,
        EstimatorId::Shen,
        EstimatorId::ShenK,
        EstimatorId::NbdMle,
    ];

    /// The seven censored-data estimators compared on field data: four under
    /// CSR, three under the NBD model. Warde–Petran is omitted since it
    /// coincides with the censored Cottam estimator at ℓ = 1.
    pub const CENSORED_SET: [EstimatorId; 7] = [
        EstimatorId::DahdouhKoedam,
        EstimatorId::CottamCensored,
        EstimatorId::PollardCensored,
        EstimatorId::CsrMleCensored,
        EstimatorId::MorisitaCensored,
        EstimatorId::ShenCensored,
        EstimatorId::NbdMleCensored,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorId::Cottam => "cottam",
            EstimatorId::Pollard => "pollard",
            EstimatorId::CsrMle => "csr-mle",
            EstimatorId::MorisitaM1 => "morisita-m1",
            EstimatorId::MorisitaM2 => "morisita-m2",
            EstimatorId::Shen => "shen",
            EstimatorId::ShenK => "shen-k",
            EstimatorId::NbdMle => "nbd-mle",
            EstimatorId::WardePetran => "warde-petran",
            EstimatorId::DahdouhKoedam => "dahdouh-koedam",
            EstimatorId::CottamCensored => "cottam-censored",
            EstimatorId::PollardCensored => "pollard-censored",
            EstimatorId::CsrMleCensored => "csr-mle-censored",
            EstimatorId::ShenCensored => "shen-censored",
            EstimatorId::MorisitaCensored => "morisita-censored",
            EstimatorId::NbdMleCensored => "nbd-mle-censored",
        }
    }

    pub fn handles_censoring(self) -> bool {
        !EstimatorId::COMPLETE_SET.contains(&self)
    }
}

impl fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        EstimatorId::ALL
            .iter()
            .copied()
            .find(|id| id.name() == norm)
            .ok_or_else(|| format!("unknown estimator '{s}'"))
    }
}

/// Output of one estimator on one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate<T> {
    pub lambda_hat: T,
    /// Aggregation estimate for NBD estimators; `+∞` marks a fit whose
    /// likelihood was flat in k (CSR-consistent data).
    pub k_hat: Option<T>,
    pub estimator: EstimatorId,
    /// False when the estimate is unusable (e.g. a non-positive Shen-type
    /// density); invalid estimates are reported, never clamped.
    pub valid: bool,
    pub warnings: Vec<String>,
}

impl<T: Scalar> DensityEstimate<T> {
    pub(crate) fn new(estimator: EstimatorId, lambda_hat: T) -> Self {
        let mut est = DensityEstimate {
            lambda_hat,
            k_hat: None,
            estimator,
            valid: true,
            warnings: Vec::new(),
        };
        if !(lambda_hat > T::zero() && lambda_hat.is_finite()) {
            est.valid = false;
            est.warnings
                .push(format!("density estimate {lambda_hat} is not positive and finite"));
        }
        est
    }

    pub(crate) fn relabel(mut self, estimator: EstimatorId) -> Self {
        self.estimator = estimator;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdjustmentMethod {
    /// Observed moment rescaled by the Poisson truncation factor implied by
    /// the censoring rate.
    PoissonCorrection,
    /// Censored sectors replaced by their CSR conditional expectation beyond
    /// the search radius at an initial density.
    NbdImputation,
}

/// A censoring-adjusted estimate of E[R^u].
#[derive(Debug, Clone, PartialEq)]
pub struct AdjustedMoment<T> {
    pub u: T,
    pub value: T,
    pub method: AdjustmentMethod,
    pub lambda_init: Option<T>,
}

/// Runs estimator `id` on `sample`. `lambda_init` seeds the imputation-based
/// censored estimators and defaults to the censored Pollard estimate.
pub fn estimate<T: Scalar>(
    id: EstimatorId,
    sample: &DistanceSample<T>,
    lambda_init: Option<T>,
) -> Result<DensityEstimate<T>> {
    match id {
        EstimatorId::Cottam => cottam(sample),
        EstimatorId::Pollard => pollard(sample),
        EstimatorId::CsrMle => csr_mle_complete(sample),
        EstimatorId::MorisitaM1 => morisita_m1(sample),
        EstimatorId::MorisitaM2 => morisita_m2(sample),
        EstimatorId::Shen => shen(sample),
        EstimatorId::ShenK => shen_k(sample),
        EstimatorId::NbdMle => nbd_mle_complete(sample),
        EstimatorId::WardePetran => warde_petran(sample),
        EstimatorId::DahdouhKoedam => dahdouh_koedam(sample),
        EstimatorId::CottamCensored => cottam_censored(sample),
        EstimatorId::PollardCensored => pollard_censored(sample),
        EstimatorId::CsrMleCensored => csr_mle_censored(sample),
        EstimatorId::ShenCensored => shen_censored(sample, lambda_init),
        EstimatorId::MorisitaCensored => morisita_censored(sample, lambda_init),
        EstimatorId::NbdMleCensored => nbd_mle_censored(sample),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimator_names_round_trip() {
        for id in EstimatorId::ALL {
            assert_eq!(id.name().parse::<EstimatorId>().unwrap(), id);
        }
        assert_eq!("NBD_MLE_censored".parse::<EstimatorId>().unwrap(), EstimatorId::NbdMleCensored);
        assert!("median".parse::<EstimatorId>().is_err());
        let json = serde_json::to_string(&EstimatorId::CsrMleCensored).unwrap();
        assert_eq!(json, "\"csr-mle-censored\"");
    }

    #[test]
    fn censored_set_has_seven_estimators() {
        assert_eq!(EstimatorId::CENSORED_SET.len(), 7);
        assert!(EstimatorId::CENSORED_SET.iter().all(|id| id.handles_censoring()));
        assert!(!EstimatorId::CENSORED_SET.contains(&EstimatorId::WardePetran));
    }
}
