//! Assertion-based question answering toolkit.
//!
//! Takes a question and a passage and produces a semi-structured assertion
//! `<subject; predicate; arguments...>` that answers the question. Two routes
//! are implemented: an extractive pipeline (clause-based candidate extraction,
//! multi-granularity matching features, LambdaMART ranking) and a generative
//! model (hierarchical tuple/word GRU decoder over the encoded passage and
//! question). A downstream answer-sentence-selection experiment reuses the
//! assertion features.

pub mod align;
pub mod cli;
pub mod corpus;
pub mod matchers;
pub mod neuralcore;
pub mod openie;
pub mod pbqa;
pub mod ranker;
pub mod seq2ast;

mod error;

pub use error::{Error, Result};
