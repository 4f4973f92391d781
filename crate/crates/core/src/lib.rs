//! Density estimation from point-centered quarter (PCQM) distance samples with
//! right-censoring at a maximum search radius.
//!
//! The numerical core (`specfun`, `model`, `optimize`, `estimators`) is generic
//! over [`Scalar`] (`f32` or `f64`); the simulation, ingestion and benchmark
//! layers work in `f64`. Concrete aliases for the common instantiations are
//! exported at the crate root.

// `!(x > 0)` style checks are used on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod estimators;
pub mod evaluate;
pub mod ingest;
pub mod model;
pub mod optimize;
pub mod scalar;
pub mod simulate;
pub mod specfun;

pub use estimators::{
    AdjustedMoment, AdjustmentMethod, DensityEstimate, DistanceSample, EstimatorError,
    EstimatorId, Observation,
};
pub use model::{CsrModel, ModelError, NbdModel};
pub use optimize::{OptimError, OptimResult};
pub use scalar::Scalar;
pub use specfun::{SpecialError, ToleranceConfig};

pub type CsrModelF64 = CsrModel<f64>;
pub type NbdModelF64 = NbdModel<f64>;
pub type DistanceSampleF64 = DistanceSample<f64>;
pub type DensityEstimateF64 = DensityEstimate<f64>;
pub type AdjustedMomentF64 = AdjustedMoment<f64>;

pub type CsrModelF32 = CsrModel<f32>;
pub type NbdModelF32 = NbdModel<f32>;
pub type DistanceSampleF32 = DistanceSample<f32>;
pub type DensityEstimateF32 = DensityEstimate<f32>;
