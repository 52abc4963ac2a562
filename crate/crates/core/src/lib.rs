//! Explainable re-ranking.
//!
//! BM25 retrieves candidates ([`retrieval`]), a single-score head orders them
//! ([`scorer`], [`rerank`]) after training under one of four objectives
//! ([`training`]), Shapley values attribute each score to summary tokens
//! ([`attribution`]) and the top tokens feed an explanation prompt
//! ([`explain`]). [`metrics`] scores rankings and texts.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.

pub mod attribution;
pub mod corpus;
pub mod explain;
pub mod fsutil;
pub mod http;
pub mod metrics;
pub mod rerank;
pub mod retrieval;
pub mod scalar;
pub mod scorer;
pub mod synthetic;
pub mod training;

#[cfg(any(test, feature = "stub-server"))]
pub mod stub;

pub use scalar::Scalar;

pub type LinearScorerF64 = scorer::LinearScorer<f64>;
pub type LinearScorerF32 = scorer::LinearScorer<f32>;
pub type Bm25ParamsF64 = retrieval::Bm25Params<f64>;
pub type Bm25ParamsF32 = retrieval::Bm25Params<f32>;
pub type TrainConfigF64 = training::TrainConfig<f64>;
pub type TrainConfigF32 = training::TrainConfig<f32>;
pub type TrainReportF64 = training::TrainReport<f64>;
pub type TrainReportF32 = training::TrainReport<f32>;
pub type AttributionResultF64 = attribution::AttributionResult<f64>;
pub type AttributionResultF32 = attribution::AttributionResult<f32>;
pub type RerankedListF64 = rerank::RerankedList<f64>;
pub type RerankedListF32 = rerank::RerankedList<f32>;
pub type ExplanationRecordF64 = explain::ExplanationRecord<f64>;
pub type MetricReportF64 = metrics::MetricReport<f64>;
pub type MetricReportF32 = metrics::MetricReport<f32>;
