//! Extended Bonferroni (PFER-controlling) and Benjamini–Hochberg procedures,
//! and a Monte Carlo study of their power and stability once their error
//! rates are equalized.
//!
//! The kernels are generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the scalar to `f64`, which is what the simulation pipeline uses.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod equalizer;
pub mod error;
pub mod error_rates;
pub mod harness;
pub mod metrics;
pub mod procedures;
pub mod scalar;
pub mod simulator;
pub mod special;
pub mod textio;
pub mod ttest;

pub use equalizer::{
    build_grid, equalize, estimate_error_curve, match_by_fdr, match_by_pfer, Metric, Procedure,
};
pub use error::{Error, Result};
pub use error_rates::{aggregate_rates, classify, GroundTruth};
pub use metrics::{compare_outcomes, sd_minimum_location, summarize};
pub use procedures::{bh_reject, bh_reject_oracle, bonferroni_reject, RejectionSet};
pub use scalar::Real;
pub use simulator::{generate_replicate, SimulationConfig};
pub use ttest::{pooled_t_statistic, pvalues_for_dataset, t_pvalue};

pub type PValueVector = procedures::PValueVector<f64>;
pub type BonferroniParam = procedures::BonferroniParam<f64>;
pub type BHParam = procedures::BHParam<f64>;
pub type ReplicateOutcome = error_rates::ReplicateOutcome<f64>;
pub type RateEstimates = error_rates::RateEstimates<f64>;
pub type TwoGroupDataset = ttest::TwoGroupDataset<f64>;
pub type ThresholdGrid = equalizer::ThresholdGrid<f64>;
pub type ErrorCurve = equalizer::ErrorCurve<f64>;
pub type EqualizationTable = equalizer::EqualizationTable<f64>;
pub type StabilitySummary = metrics::StabilitySummary<f64>;
pub type ComparisonStats = metrics::ComparisonStats<f64>;

pub type PValueVector32 = procedures::PValueVector<f32>;
pub type TwoGroupDataset32 = ttest::TwoGroupDataset<f32>;

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
pub struct ReadmeDoctests;
