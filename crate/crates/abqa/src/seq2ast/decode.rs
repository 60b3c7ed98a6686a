//! Greedy decoding of an assertion from a trained generator.

use crate::corpus::Assertion;
use crate::neuralcore::Tensor;
use crate::seq2ast::{
    tuple_step, word_step, Encoding, Seq2AstParams, SRC_SEP, TGT_EOA_ID, TGT_EOF_ID, TGT_SOS_ID,
    TGT_UNK_ID,
};
use crate::Result;

/// Budgets that bound the decode when the model never closes a field or
/// an assertion on its own.
#[derive(Debug, Clone, Copy)]
pub struct DecodeLimits {
    pub max_fields: usize,
    pub max_words_per_field: usize,
}

impl Default for DecodeLimits {
    fn default() -> Self {
        DecodeLimits {
            max_fields: 8,
            max_words_per_field: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecodeOutcome {
    Complete(Assertion),
    /// The decode ran out of budget or produced an empty required field.
    Incomplete {
        fields: Vec<Vec<String>>,
        reason: String,
    },
}

/// One emitted word with its provenance.
#[derive(Debug, Clone)]
pub struct TraceStep {
    pub token: String,
    /// True when an unknown-word prediction was replaced by the most
    /// attended source token.
    pub copied: bool,
    pub attention: Vec<f64>,
    pub field_index: usize,
}

#[derive(Debug, Clone, Default)]
pub struct DecodeTrace {
    pub steps: Vec<TraceStep>,
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Most attended source position whose token is not the separator; ties
/// keep the earliest position.
fn copy_source<'a>(enc: &'a Encoding, attention: &[f64]) -> &'a str {
    let mut best: Option<(usize, f64)> = None;
    for (t, &w) in attention.iter().enumerate() {
        if enc.tokens[t] == SRC_SEP {
            continue;
        }
        if best.is_none_or(|(_, bw)| w > bw) {
            best = Some((t, w));
        }
    }
    match best {
        Some((t, _)) => &enc.tokens[t],
        // Degenerate source of only separators cannot arise from encode.
        None => &enc.tokens[0],
    }
}

/// Greedy decode: fields end at the end-of-field token, the assertion
/// ends when a field opens with the end-of-assertion token. Unknown-word
/// predictions are replaced by the most attended source token, but the
/// unknown id is what feeds the next step.
pub fn decode_greedy(
    params: &Seq2AstParams,
    enc: &Encoding,
    limits: &DecodeLimits,
) -> Result<(DecodeOutcome, DecodeTrace)> {
    let s_t0 = {
        let mut v = params.enc_init_w.matvec(&enc.final_state);
        for (x, &b) in v.iter_mut().zip(params.enc_init_b.data()) {
            *x = (*x + b).tanh();
        }
        v
    };
    let mut tuple_h = Tensor::from_vec(&[s_t0.len()], s_t0)?;
    let mut last_word_state = params.tuple_start.clone();
    let mut fields: Vec<Vec<String>> = Vec::new();
    let mut trace = DecodeTrace::default();
    let mut closed = false;
    for field_index in 0..limits.max_fields {
        let (s_t, _) = tuple_step(params, &tuple_h, &last_word_state)?;
        let mut s_w = {
            let mut v = params.word_init_w.matvec(s_t.data());
            for (x, &b) in v.iter_mut().zip(params.word_init_b.data()) {
                *x = (*x + b).tanh();
            }
            Tensor::from_vec(&[v.len()], v)?
        };
        let mut y_prev = TGT_SOS_ID;
        let mut field: Vec<String> = Vec::new();
        let mut ended = false;
        for word_index in 0..limits.max_words_per_field {
            let (next, logits, weights, _) = word_step(params, &s_w, &s_t, y_prev, &enc.states)?;
            s_w = next;
            let choice = argmax(&logits);
            if choice == TGT_EOA_ID && word_index == 0 {
                closed = true;
                ended = true;
                break;
            }
            if choice == TGT_EOF_ID {
                ended = true;
                last_word_state = s_w.clone();
                break;
            }
            let (token, copied) = if choice == TGT_UNK_ID || choice == TGT_EOA_ID || choice == TGT_SOS_ID {
                // Anything unusable as a word falls back to copying.
                (copy_source(enc, &weights).to_string(), true)
            } else {
                (params.tgt_token(choice).to_string(), false)
            };
            trace.steps.push(TraceStep {
                token: token.clone(),
                copied,
                attention: weights,
                field_index,
            });
            field.push(token);
            y_prev = if copied { TGT_UNK_ID } else { choice };
            last_word_state = s_w.clone();
        }
        if closed {
            break;
        }
        if !ended {
            // Budget exhausted mid-field: force-close it and move on.
            last_word_state = s_w.clone();
        }
        fields.push(field);
        tuple_h = s_t;
    }
    if !closed {
        return Ok((
            DecodeOutcome::Incomplete {
                fields,
                reason: format!("no end-of-assertion within {} fields", limits.max_fields),
            },
            trace,
        ));
    }
    if fields.len() < 2 || fields[0].is_empty() || fields[1].is_empty() {
        return Ok((
            DecodeOutcome::Incomplete {
                fields,
                reason: "decoded assertion lacks a subject or predicate".into(),
            },
            trace,
        ));
    }
    let mut it = fields.into_iter().filter(|f| !f.is_empty());
    let subject = it.next().unwrap();
    let predicate = it.next().unwrap();
    let assertion = Assertion::new(subject, predicate, it.collect())?;
    Ok((DecodeOutcome::Complete(assertion), trace))
}
