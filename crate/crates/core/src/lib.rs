//! Huber quantile regression: consistent scoring functions, functional
//! estimation, dense networks trained on those scores, forecast evaluation,
//! and the capped investment decision rule.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix it to `f64`, which is what the CLI uses.

pub mod data;
pub mod decision;
pub mod error;
pub mod evaluation;
pub mod functionals;
pub mod network;
pub mod pipeline;
pub mod quadrature;
pub mod roots;
pub mod scalar;
pub mod scoring;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type ScoreParams = scoring::ScoreParams<f64>;
pub type EmpiricalSample = functionals::EmpiricalSample<f64>;
pub type LogNormalParams = functionals::LogNormalParams<f64>;
pub type FunctionalRequest = functionals::FunctionalRequest<f64>;
pub type Dataset = data::Dataset<f64>;
pub type NormStats = data::NormStats<f64>;
pub type NetworkModel = network::NetworkModel<f64>;
pub type PredictionSet = evaluation::PredictionSet<f64>;
pub type EvaluationReport = evaluation::EvaluationReport<f64>;
pub type DecisionPolicy = decision::DecisionPolicy<f64>;
