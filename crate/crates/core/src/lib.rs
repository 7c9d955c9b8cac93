//! Bayesian comparison and averaging of two-level binomial models for small
//! areas: normal random effects on the logit scale, beta random effects, a
//! common-rate model and a one-rate-per-area model.
//!
//! Parameters are fitted on grids under flat priors; models are compared
//! through the posterior distributions of their deviances and averaged with
//! per-draw posterior model probabilities.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0)` also rejects NaN

pub mod areas;
pub mod averaging;
pub mod dataset;
pub mod deviance;
pub mod error;
pub mod grid;
pub mod models;
pub mod numerics;
pub mod pipeline;
mod scalar;

pub use dataset::{CityRecord, Dataset};
pub use error::{Error, Result};
pub use models::ModelTag;
pub use scalar::Real;

pub type AreaDrawMatrix = areas::AreaDrawMatrix<f64>;
pub type AveragingConfig = averaging::AveragingConfig<f64>;
pub type AlignedDraws = averaging::AlignedDraws<f64>;
pub type DevianceDistribution = deviance::DevianceDistribution<f64>;
pub type DevianceDiffSummary = deviance::DevianceDiffSummary<f64>;
pub type GridSpec = grid::GridSpec<f64>;
pub type GridChoice = grid::GridChoice<f64>;
pub type GridSummary = grid::GridSummary<f64>;
pub type PosteriorGrid = grid::PosteriorGrid<f64>;
pub type ParametricModel = grid::ParametricModel<f64>;
pub type NormalLogitParams = models::NormalLogitParams<f64>;
pub type BetaParamsAb = models::BetaParamsAb<f64>;
pub type BetaParamsMeanSd = models::BetaParamsMeanSd<f64>;
pub type QuadratureRule = numerics::QuadratureRule<f64>;
pub type KdeCurve = numerics::KdeCurve<f64>;
pub type PipelineConfig = pipeline::PipelineConfig<f64>;
pub type Analysis = pipeline::Analysis<f64>;
