//! Encoder and decoder step functions plus the teacher-forced forward and
//! backward passes used in training.

use crate::neuralcore::{
    attention, attention_backward, cross_entropy, gru_backward, gru_step, AttentionCache,
    GruCache, Tensor,
};
use crate::seq2ast::{Seq2AstParams, SRC_SEP, TGT_EOA_ID, TGT_EOF_ID, TGT_SOS_ID};
use crate::{Error, Result};

/// Encoder output: per-position bidirectional states over the sequence
/// `[passage…, <sep>, question…]` plus the caches needed for backward.
pub struct Encoding {
    /// T × 2H: forward state ; backward state per position.
    pub states: Tensor,
    /// [last forward state ; last backward state] (2H).
    pub final_state: Vec<f64>,
    /// Source surface tokens after truncation, separator included.
    pub tokens: Vec<String>,
    pub(crate) ids: Vec<usize>,
    pub(crate) fwd_caches: Vec<GruCache>,
    pub(crate) bwd_caches: Vec<GruCache>,
}

/// Runs the bidirectional encoder. The passage tail is truncated so the
/// combined sequence stays within `max_len`; the question is never cut.
pub fn encode(
    params: &Seq2AstParams,
    question: &[String],
    passage: &[String],
    max_len: usize,
) -> Result<Encoding> {
    if question.is_empty() {
        return Err(Error::EmptyInput("question tokens".into()));
    }
    if question.len() + 1 > max_len {
        return Err(Error::Data(format!(
            "question length {} leaves no room under the source limit {max_len}",
            question.len()
        )));
    }
    let keep = passage.len().min(max_len - 1 - question.len());
    let mut tokens: Vec<String> = passage[..keep].to_vec();
    tokens.push(SRC_SEP.to_string());
    tokens.extend(question.iter().cloned());
    let ids: Vec<usize> = tokens.iter().map(|t| params.src_id(t)).collect();

    let h = params.dims.enc_hidden;
    let run = |cell: &crate::neuralcore::GruCellParams,
               order: &[usize]|
     -> Result<(Vec<Vec<f64>>, Vec<GruCache>)> {
        let mut state = Tensor::zeros(&[h]);
        let mut states = Vec::with_capacity(order.len());
        let mut caches = Vec::with_capacity(order.len());
        for &id in order {
            let x = Tensor::from_vec(&[params.dims.src_embed], params.src_emb.row(id).to_vec())?;
            let (next, cache) = gru_step(cell, &x, &state)?;
            states.push(next.data().to_vec());
            caches.push(cache);
            state = next;
        }
        Ok((states, caches))
    };
    let (fwd_states, fwd_caches) = run(&params.enc_fwd, &ids)?;
    let rev_ids: Vec<usize> = ids.iter().rev().copied().collect();
    let (bwd_states, bwd_caches) = run(&params.enc_bwd, &rev_ids)?;

    let t_len = ids.len();
    let mut states = Tensor::zeros(&[t_len, 2 * h]);
    for t in 0..t_len {
        let row = states.row_mut(t);
        row[..h].copy_from_slice(&fwd_states[t]);
        // Backward step T-1-t consumed position t.
        row[h..].copy_from_slice(&bwd_states[t_len - 1 - t]);
    }
    let mut final_state = fwd_states[t_len - 1].clone();
    final_state.extend(&bwd_states[t_len - 1]);
    Ok(Encoding {
        states,
        final_state,
        tokens,
        ids,
        fwd_caches,
        bwd_caches,
    })
}

/// Advances the tuple-level state: the input is the final word-level state
/// of the previous field (or the learned start vector for the first).
pub fn tuple_step(
    params: &Seq2AstParams,
    s_t_prev: &Tensor,
    last_word_state: &Tensor,
) -> Result<(Tensor, GruCache)> {
    gru_step(&params.tuple_gru, last_word_state, s_t_prev)
}

/// One word-level decoder step: the GRU consumes [field state ; previous
/// target embedding], attends over the encoder states with the new word
/// state as query, and projects [word state ; context] to vocabulary
/// logits. Returns (new word state, logits, attention weights, caches).
pub fn word_step(
    params: &Seq2AstParams,
    s_w_prev: &Tensor,
    s_t: &Tensor,
    y_prev: usize,
    enc_states: &Tensor,
) -> Result<(Tensor, Vec<f64>, Vec<f64>, WordStepCache)> {
    let mut x = s_t.data().to_vec();
    x.extend_from_slice(params.tgt_emb.row(y_prev));
    let x = Tensor::from_vec(&[x.len()], x)?;
    let (s_w, gru) = gru_step(&params.word_gru, &x, s_w_prev)?;
    let (weights, context, attn) = attention(&params.attn, &s_w, enc_states)?;
    let mut proj_in = s_w.data().to_vec();
    proj_in.extend_from_slice(context.data());
    let mut logits = params.out_w.matvec(&proj_in);
    for (l, &b) in logits.iter_mut().zip(params.out_b.data()) {
        *l += b;
    }
    Ok((
        s_w.clone(),
        logits,
        weights.data().to_vec(),
        WordStepCache {
            gru,
            attn,
            s_w,
            proj_in,
            y_prev,
        },
    ))
}

pub struct WordStepCache {
    pub(crate) gru: GruCache,
    pub(crate) attn: AttentionCache,
    /// Only the gradient path needs the GRU cache; the state itself is
    /// kept so tests can trace how it threads between decoder levels.
    #[cfg_attr(not(test), allow(dead_code))]
    pub(crate) s_w: Tensor,
    /// [word state ; context], input of the output projection.
    pub(crate) proj_in: Vec<f64>,
    pub(crate) y_prev: usize,
}

pub(crate) struct StepRecord {
    pub cache: WordStepCache,
    /// softmax − one-hot, unscaled.
    pub dlogits: Vec<f64>,
    #[cfg_attr(not(test), allow(dead_code))]
    pub target: usize,
}

pub(crate) struct FieldRecord {
    pub tuple_cache: GruCache,
    pub s_t: Tensor,
    /// tanh field-start word state.
    pub s_w0: Vec<f64>,
    pub steps: Vec<StepRecord>,
}

pub(crate) struct ForwardRecord {
    pub fields: Vec<FieldRecord>,
    pub s_t0: Vec<f64>,
    pub token_count: usize,
    pub loss_sum: f64,
}

impl ForwardRecord {
    pub fn mean_loss(&self) -> f64 {
        self.loss_sum / self.token_count as f64
    }
}

fn tanh_affine(w: &Tensor, b: &Tensor, x: &[f64]) -> Vec<f64> {
    let mut out = w.matvec(x);
    for (o, &bb) in out.iter_mut().zip(b.data()) {
        *o = (*o + bb).tanh();
    }
    out
}

/// Teacher-forced pass over one instance. `fields` holds target word ids
/// per assertion field; the model must additionally emit end-of-field
/// after each and end-of-assertion as the opening of a phantom final
/// field.
pub(crate) fn forward_teacher(
    params: &Seq2AstParams,
    enc: &Encoding,
    fields: &[Vec<usize>],
) -> Result<ForwardRecord> {
    if fields.is_empty() {
        return Err(Error::EmptyInput("target assertion fields".into()));
    }
    let s_t0 = tanh_affine(&params.enc_init_w, &params.enc_init_b, &enc.final_state);
    let mut tuple_h = Tensor::from_vec(&[s_t0.len()], s_t0.clone())?;
    let mut last_word_state = params.tuple_start.clone();
    let mut record = ForwardRecord {
        fields: Vec::with_capacity(fields.len() + 1),
        s_t0,
        token_count: 0,
        loss_sum: 0.0,
    };
    for k in 0..=fields.len() {
        let targets: Vec<usize> = if k < fields.len() {
            fields[k].iter().copied().chain([TGT_EOF_ID]).collect()
        } else {
            vec![TGT_EOA_ID]
        };
        let (s_t, tuple_cache) = tuple_step(params, &tuple_h, &last_word_state)?;
        let s_w0 = tanh_affine(&params.word_init_w, &params.word_init_b, s_t.data());
        let mut s_w = Tensor::from_vec(&[s_w0.len()], s_w0.clone())?;
        let mut y_prev = TGT_SOS_ID;
        let mut steps = Vec::with_capacity(targets.len());
        for &target in &targets {
            let (next, logits, _, cache) = word_step(params, &s_w, &s_t, y_prev, &enc.states)?;
            let (loss, dlogits) = cross_entropy(&logits, target)?;
            record.loss_sum += loss;
            record.token_count += 1;
            steps.push(StepRecord {
                cache,
                dlogits,
                target,
            });
            y_prev = target;
            s_w = next;
        }
        last_word_state = s_w;
        tuple_h = s_t.clone();
        record.fields.push(FieldRecord {
            tuple_cache,
            s_t,
            s_w0,
            steps,
        });
    }
    Ok(record)
}

/// Backpropagates the mean-per-token loss of [`forward_teacher`] through
/// the whole graph, accumulating into `grads`.
pub(crate) fn backward_teacher(
    params: &Seq2AstParams,
    enc: &Encoding,
    record: &ForwardRecord,
    grads: &mut Seq2AstParams,
) {
    let scale = 1.0 / record.token_count as f64;
    let dims = params.dims;
    let t_len = enc.ids.len();
    let mut d_enc_states = Tensor::zeros(&[t_len, 2 * dims.enc_hidden]);
    // Gradient flowing into the field state as the next tuple step's
    // hidden input.
    let mut d_tuple_h = vec![0.0; dims.tuple_hidden];
    // Gradient flowing into a field's last word state from the next
    // field's tuple step input; none for the final (phantom) field.
    let mut d_last_word: Option<Vec<f64>> = None;
    for (k, field) in record.fields.iter().enumerate().rev() {
        let mut d_s_t = std::mem::take(&mut d_tuple_h);
        let mut d_s_w_next = d_last_word.take().unwrap_or(vec![0.0; dims.word_hidden]);
        for step in field.steps.iter().rev() {
            let mut d_s_w = d_s_w_next;
            let dlogits: Vec<f64> = step.dlogits.iter().map(|d| d * scale).collect();
            grads.out_w.add_outer(&dlogits, &step.cache.proj_in);
            grads.out_b.add_slice(&dlogits);
            let dproj = params.out_w.matvec_t(&dlogits);
            for (g, d) in d_s_w.iter_mut().zip(&dproj[..dims.word_hidden]) {
                *g += d;
            }
            let dcontext = &dproj[dims.word_hidden..];
            let (dquery, dkeys) =
                attention_backward(&params.attn, &step.cache.attn, None, dcontext, &mut grads.attn);
            for (g, d) in d_s_w.iter_mut().zip(dquery) {
                *g += d;
            }
            for t in 0..t_len {
                for (g, &d) in d_enc_states.row_mut(t).iter_mut().zip(dkeys.row(t)) {
                    *g += d;
                }
            }
            let (dx, dh_prev) = gru_backward(&params.word_gru, &step.cache.gru, &d_s_w, &mut grads.word_gru);
            for (g, d) in d_s_t.iter_mut().zip(&dx[..dims.tuple_hidden]) {
                *g += d;
            }
            let row = grads.tgt_emb.row_mut(step.cache.y_prev);
            for (g, d) in row.iter_mut().zip(&dx[dims.tuple_hidden..]) {
                *g += d;
            }
            d_s_w_next = dh_prev;
        }
        // d_s_w_next now carries the gradient into the field-start state.
        let dpre: Vec<f64> = d_s_w_next
            .iter()
            .zip(&field.s_w0)
            .map(|(&d, &s)| d * (1.0 - s * s))
            .collect();
        grads.word_init_w.add_outer(&dpre, field.s_t.data());
        grads.word_init_b.add_slice(&dpre);
        for (g, d) in d_s_t.iter_mut().zip(params.word_init_w.matvec_t(&dpre)) {
            *g += d;
        }
        let (dx, dh_prev) =
            gru_backward(&params.tuple_gru, &field.tuple_cache, &d_s_t, &mut grads.tuple_gru);
        if k == 0 {
            for (g, d) in grads.tuple_start.data_mut().iter_mut().zip(dx) {
                *g += d;
            }
        } else {
            d_last_word = Some(dx);
        }
        d_tuple_h = dh_prev;
    }
    // Through the initial tuple-state map into the encoder summary.
    let dpre0: Vec<f64> = d_tuple_h
        .iter()
        .zip(&record.s_t0)
        .map(|(&d, &s)| d * (1.0 - s * s))
        .collect();
    grads.enc_init_w.add_outer(&dpre0, &enc.final_state);
    grads.enc_init_b.add_slice(&dpre0);
    let d_final = params.enc_init_w.matvec_t(&dpre0);
    let h = dims.enc_hidden;
    for (g, d) in d_enc_states.row_mut(t_len - 1)[..h].iter_mut().zip(&d_final[..h]) {
        *g += d;
    }
    for (g, d) in d_enc_states.row_mut(0)[h..].iter_mut().zip(&d_final[h..]) {
        *g += d;
    }
    // Encoder BPTT, each direction in its own consumption order.
    let mut dh = vec![0.0; h];
    for t in (0..t_len).rev() {
        for (g, &d) in dh.iter_mut().zip(&d_enc_states.row(t)[..h]) {
            *g += d;
        }
        let (dx, dh_prev) = gru_backward(&params.enc_fwd, &enc.fwd_caches[t], &dh, &mut grads.enc_fwd);
        let row = grads.src_emb.row_mut(enc.ids[t]);
        for (g, d) in row.iter_mut().zip(dx) {
            *g += d;
        }
        dh = dh_prev;
    }
    let mut dh = vec![0.0; h];
    for r in (0..t_len).rev() {
        let pos = t_len - 1 - r;
        for (g, &d) in dh.iter_mut().zip(&d_enc_states.row(pos)[h..]) {
            *g += d;
        }
        let (dx, dh_prev) = gru_backward(&params.enc_bwd, &enc.bwd_caches[r], &dh, &mut grads.enc_bwd);
        let row = grads.src_emb.row_mut(enc.ids[pos]);
        for (g, d) in row.iter_mut().zip(dx) {
            *g += d;
        }
        dh = dh_prev;
    }
}
