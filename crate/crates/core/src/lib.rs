//! Multimodal job-interview analytics.
//!
//! The crate turns recorded mock interviews (timed transcripts, frame-level
//! acoustic tracks and facial shape-model tracks) into per-interview feature
//! vectors, merges noisy crowd ratings into consensus scores with a rater
//! reliability model, trains linear ε-SVR and Lasso regressors for sixteen
//! behavioral traits and produces the evaluation tables that go with them.
//!
//! Module map:
//!
//! - [`corpus`]: data model, manifest loading, validation and track slicing
//! - [`aggregation`]: EM consensus, Krippendorff's alpha, one-vs-rest agreement
//! - [`lexical`]: tokenization, category lexicons, rate features, LDA topics
//! - [`prosody`]: pitch/intensity/formant/pause statistics
//! - [`facial`]: local shape reconstruction, landmark distances, head pose
//! - [`features`]: per-interview assembly into a modality-tagged matrix
//! - [`regression`]: normalization, ε-SVR, Lasso, model files
//! - [`evaluation`]: trial protocol, correlation, AUC, mutual information
//! - [`synthesis`]: planted synthetic corpora used as verification oracles
//! - [`pipeline`]: stage orchestration shared by the command-line tool

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregation;
pub mod config;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod facial;
pub mod features;
pub mod lexical;
pub mod pipeline;
pub mod prosody;
pub mod regression;
pub mod seed;
pub mod stats;
pub mod synthesis;
pub mod traits;

pub use error::{Error, Result};
pub use traits::TraitId;
