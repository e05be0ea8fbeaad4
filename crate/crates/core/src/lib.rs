//! Histogram regression model selection under heteroscedastic noise.
//!
//! The crate simulates piecewise heteroscedastic regression problems, fits
//! regressograms on two-regime partitions of `[0, 1]`, and compares model
//! selection procedures (Mallows-type and linear penalties, V-fold and
//! hold-out penalties, cross-validation, and loss-aware ideal procedures)
//! through the ratio of their expected loss to the oracle's.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`, which the simulation harness uses.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod binned;
pub mod error;
pub mod harness;
pub mod models;
pub mod penalties;
pub mod quadrature;
pub mod real;
pub mod regressogram;
pub mod rng;
pub mod scenario;
pub mod selection;
pub mod theory_oracle;

pub use error::{Error, Result};
pub use models::{build_partition, enumerate_models, CollectionSpec, Family, MaxDimRule, ModelIndex, Split};
pub use penalties::{delta_np, PenaltyKind};
pub use real::Real;
pub use scenario::{make_scenario, NoiseLaw, EXPERIMENTS};

pub type Scenario = scenario::RegressionScenario<f64>;
pub type Dataset = scenario::Dataset<f64>;
pub type Partition = models::Partition<f64>;
pub type Penalty = penalties::Penalty<f64>;
pub type CriterionTable = selection::CriterionTable<f64>;
pub type SelectionOutcome = selection::SelectionOutcome<f64>;
pub type DecompositionRecord = theory_oracle::DecompositionRecord<f64>;
