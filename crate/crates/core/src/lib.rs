//! Batch evaluation of reasoning models on five-choice questions.
//!
//! The pipeline runs prompt-condition, answer-shuffling, self-consistency,
//! and thinking-toggle experiments against configurable model endpoints
//! (or a replay provider), then reduces the per-trial records to paired
//! outcome matrices and exact statistical tests.

pub mod corpus;
pub mod experiments;
pub mod extraction;
pub mod prm;
pub mod prompting;
pub mod provider;
pub mod report;
pub mod stats;
