//! Synthetic keyword-question training data generation.
//!
//! Turns a large corpus of natural language questions plus a small seed set of
//! hand-labeled keyword-question pairs into a large, quality-filtered set of
//! synthetic keyword-question pairs:
//!
//! 1. [`corpus`] loads and filters the question corpus and computes collection
//!    statistics.
//! 2. [`phrasing`] detects multi-word phrases and merges them into single units.
//! 3. [`generator`] samples keyword queries from per-question term
//!    distributions under a query-length prior.
//! 4. [`index`] provides positional inverted indexing with Sequential
//!    Dependence Model (SDM) scoring and top-N search.
//! 5. [`filters`] selects the best candidate keyword per question (KQF) and
//!    the highest-quality pairs overall (TDF).
//! 6. [`metrics`] implements ROUGE-L/1/2 and BLEU plus keyword-set aggregates.
//! 7. [`experiments`] runs cross-validated grid search and end-to-end
//!    evaluation.
//!
//! The `k2qgen` binary orchestrates these stages as subcommands; see the
//! README for the pipeline walkthrough.

pub mod config;
pub mod corpus;
pub mod experiments;
pub mod filters;
pub mod fixture;
pub mod generator;
pub mod index;
pub mod metrics;
pub mod phrasing;

mod error;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
