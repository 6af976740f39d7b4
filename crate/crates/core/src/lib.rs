//! Questionnaire-based cancer risk prediction.
//!
//! Encodes questionnaire responses into fixed-width vectors, trains a small
//! feed-forward network and five classical classifiers on undersampled
//! data, evaluates them over repeated random splits, ranks risk factors by
//! first-layer weights and projects layer activations with PCA.

pub mod dataset;
pub mod error;
pub mod experiment;
pub mod importance;
pub mod linalg;
pub mod metrics;
pub mod mlp;
pub mod models;
pub mod pca;
pub mod protocol;
pub mod report;
pub mod schema;

pub use error::{Error, Result};
