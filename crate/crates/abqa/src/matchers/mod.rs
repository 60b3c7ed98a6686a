//! Sentence-level relevance models between a question and an assertion: a
//! convolutional twin-tower scorer compared by cosine, and a recurrent
//! scorer over a shared bidirectional GRU. Both train with the pairwise
//! margin ranking loss.
//!
//! Matcher inputs are plain lowercased whitespace tokens; assertion fields
//! are joined with a standalone ";" token so field boundaries stay visible
//! to the models.

mod cdssm;
mod rnnmatch;

pub use cdssm::{f_cnn, CdssmParams, CdssmTower, DEFAULT_HASH_BUCKETS};
pub use rnnmatch::{f_rnn, RnnMatchParams};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::corpus::{Assertion, QAInstance};
use crate::neuralcore::{margin_rank_loss, Optimizer, ParamGroup};
use crate::{Error, Result};

/// Lowercases and splits on whitespace. Unlike the corpus tokenizer this
/// keeps punctuation tokens, so the ";" field separator survives.
pub fn matcher_tokens(text: &str) -> Vec<String> {
    text.to_lowercase().split_whitespace().map(str::to_string).collect()
}

/// Assertion rendered for the matchers: fields joined by a ";" token.
pub fn assertion_text(assertion: &Assertion) -> String {
    assertion.field_strings().join(" ; ")
}

/// One pairwise training example: a question with a correct and an
/// incorrect assertion text.
#[derive(Debug, Clone, PartialEq)]
pub struct Triple {
    pub question: String,
    pub positive: String,
    pub negative: String,
}

/// Builds training triples from labeled instances: every labeled-1
/// assertion is paired with one labeled-0 assertion sampled from the same
/// question. Questions lacking either label contribute nothing.
pub fn training_triples(instances: &[QAInstance], rng: &mut impl Rng) -> Vec<Triple> {
    let mut out = Vec::new();
    for instance in instances {
        let negatives: Vec<&Assertion> = instance
            .candidates
            .iter()
            .filter(|c| c.label == Some(0))
            .map(|c| &c.assertion)
            .collect();
        if negatives.is_empty() {
            continue;
        }
        for candidate in &instance.candidates {
            if candidate.label != Some(1) {
                continue;
            }
            let negative = negatives.choose(rng).expect("non-empty");
            out.push(Triple {
                question: instance.question.clone(),
                positive: assertion_text(&candidate.assertion),
                negative: assertion_text(negative),
            });
        }
    }
    out
}

/// A scoring model trainable with the pairwise margin objective.
pub trait PairwiseMatcher: ParamGroup + Sized {
    /// Relevance score for a question and an assertion text.
    fn score(&self, question: &str, text: &str) -> Result<f64>;

    /// Recomputes the forward pass and accumulates d(dscore·score)/d params
    /// into `grads`. Returns the score.
    fn backprop(&self, question: &str, text: &str, dscore: f64, grads: &mut Self) -> Result<f64>;

    /// A zero-valued gradient holder matching this model's shapes.
    fn grad_holder(&self) -> Self;
}

/// Trains a matcher on margin-ranked triples with per-triple updates.
/// Returns the per-epoch mean hinge loss, measured before each update.
pub fn train_pairwise<M: PairwiseMatcher>(
    model: &mut M,
    triples: &[Triple],
    margin: f64,
    epochs: usize,
    optimizer: &mut Optimizer,
) -> Result<Vec<f64>> {
    if triples.is_empty() {
        return Err(Error::EmptyInput("pairwise training triples".into()));
    }
    if margin < 0.0 {
        return Err(Error::Config(format!("margin must be non-negative, got {margin}")));
    }
    let mut trace = Vec::with_capacity(epochs);
    let mut grads = model.grad_holder();
    let mut branch_pos = model.grad_holder();
    let mut branch_neg = model.grad_holder();
    for _ in 0..epochs {
        let mut total = 0.0;
        for triple in triples {
            let pos = model.score(&triple.question, &triple.positive)?;
            let neg = model.score(&triple.question, &triple.negative)?;
            let loss = margin_rank_loss(pos, neg, margin);
            total += loss;
            if loss > 0.0 {
                branch_pos.zero();
                branch_neg.zero();
                grads.zero();
                model.backprop(&triple.question, &triple.positive, 1.0, &mut branch_pos)?;
                model.backprop(&triple.question, &triple.negative, 1.0, &mut branch_neg)?;
                // Combining whole branches keeps an identical positive and
                // negative assertion cancelling exactly, slot by slot.
                grads.accumulate(&branch_pos, -1.0);
                grads.accumulate(&branch_neg, 1.0);
                optimizer.step(model, &grads)?;
            }
        }
        trace.push(total / triples.len() as f64);
    }
    Ok(trace)
}
