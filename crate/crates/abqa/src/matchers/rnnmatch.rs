//! Recurrent matcher: question and assertion share one word embedding and
//! one bidirectional GRU. Each side is summarized by its two final hidden
//! states; the pair representation stacks both summaries with their
//! element-wise product, and a small MLP maps it to an unbounded score.

use rand::Rng;

use crate::corpus::Assertion;
use crate::matchers::{assertion_text, matcher_tokens, PairwiseMatcher};
use crate::neuralcore::{
    gru_backward, gru_step, GruCache, GruCellParams, ParamGroup, Tensor, INIT_SCALE,
};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct RnnMatchParams {
    /// Sorted vocabulary; word i embeds as row i+1, row 0 is the
    /// unknown-word vector.
    vocab: Vec<String>,
    pub emb: Tensor,
    pub fwd: GruCellParams,
    pub bwd: GruCellParams,
    /// mlp_dim × 6·hidden.
    pub w1: Tensor,
    pub b1: Tensor,
    /// 1 × mlp_dim.
    pub w2: Tensor,
    pub b2: Tensor,
}

impl RnnMatchParams {
    pub fn new(
        words: &[String],
        embed_dim: usize,
        hidden_dim: usize,
        mlp_dim: usize,
        rng: &mut impl Rng,
    ) -> RnnMatchParams {
        let mut vocab: Vec<String> = words.to_vec();
        vocab.sort();
        vocab.dedup();
        RnnMatchParams {
            emb: Tensor::uniform(&[vocab.len() + 1, embed_dim], INIT_SCALE, rng),
            vocab,
            fwd: GruCellParams::new(embed_dim, hidden_dim, rng),
            bwd: GruCellParams::new(embed_dim, hidden_dim, rng),
            w1: Tensor::uniform(&[mlp_dim, 6 * hidden_dim], INIT_SCALE, rng),
            b1: Tensor::zeros(&[mlp_dim]),
            w2: Tensor::uniform(&[1, mlp_dim], INIT_SCALE, rng),
            b2: Tensor::zeros(&[1]),
        }
    }

    pub fn zeros_like(&self) -> RnnMatchParams {
        RnnMatchParams {
            vocab: self.vocab.clone(),
            emb: self.emb.zeros_like(),
            fwd: GruCellParams::zeros(self.fwd.input_size(), self.fwd.hidden_size()),
            bwd: GruCellParams::zeros(self.bwd.input_size(), self.bwd.hidden_size()),
            w1: self.w1.zeros_like(),
            b1: self.b1.zeros_like(),
            w2: self.w2.zeros_like(),
            b2: self.b2.zeros_like(),
        }
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn hidden_size(&self) -> usize {
        self.fwd.hidden_size()
    }

    fn token_id(&self, token: &str) -> usize {
        match self.vocab.binary_search(&token.to_string()) {
            Ok(i) => i + 1,
            Err(_) => 0,
        }
    }

    /// Runs one GRU direction over the embedded ids. Returns the final
    /// hidden state and the per-step caches in consumption order.
    fn run_direction(
        &self,
        cell: &GruCellParams,
        ids: &[usize],
    ) -> Result<(Vec<f64>, Vec<GruCache>)> {
        let h_dim = cell.hidden_size();
        let mut h = Tensor::zeros(&[h_dim]);
        let mut caches = Vec::with_capacity(ids.len());
        for &id in ids {
            let x = Tensor::from_vec(&[self.emb.cols()], self.emb.row(id).to_vec())?;
            let (next, cache) = gru_step(cell, &x, &h)?;
            caches.push(cache);
            h = next;
        }
        Ok((h.data().to_vec(), caches))
    }

    fn encode_side(&self, tokens: &[String]) -> Result<SideCache> {
        if tokens.is_empty() {
            return Err(Error::EmptyInput("matcher input tokens".into()));
        }
        let ids: Vec<usize> = tokens.iter().map(|t| self.token_id(t)).collect();
        let rev_ids: Vec<usize> = ids.iter().rev().copied().collect();
        let (h_fwd, fwd_caches) = self.run_direction(&self.fwd, &ids)?;
        let (h_bwd, bwd_caches) = self.run_direction(&self.bwd, &rev_ids)?;
        let mut summary = h_fwd;
        summary.extend(h_bwd);
        Ok(SideCache {
            ids,
            rev_ids,
            fwd_caches,
            bwd_caches,
            summary,
        })
    }

    /// Pushes the gradient of one side's 2H summary back through both GRU
    /// directions and the embedding.
    fn backward_side(&self, cache: &SideCache, dsummary: &[f64], grads: &mut RnnMatchParams) {
        let h_dim = self.hidden_size();
        backward_direction(
            &self.fwd,
            &cache.fwd_caches,
            &cache.ids,
            &dsummary[..h_dim],
            &mut grads.fwd,
            &mut grads.emb,
        );
        backward_direction(
            &self.bwd,
            &cache.bwd_caches,
            &cache.rev_ids,
            &dsummary[h_dim..],
            &mut grads.bwd,
            &mut grads.emb,
        );
    }

    fn forward(&self, question: &str, text: &str) -> Result<PairCache> {
        let q = self.encode_side(&matcher_tokens(question))?;
        let a = self.encode_side(&matcher_tokens(text))?;
        let two_h = 2 * self.hidden_size();
        let mut rep = Vec::with_capacity(3 * two_h);
        rep.extend(&q.summary);
        rep.extend(&a.summary);
        for i in 0..two_h {
            rep.push(q.summary[i] * a.summary[i]);
        }
        let mut hidden = self.w1.matvec(&rep);
        for (h, &b) in hidden.iter_mut().zip(self.b1.data()) {
            *h = (*h + b).tanh();
        }
        let score = self
            .w2
            .row(0)
            .iter()
            .zip(&hidden)
            .map(|(&w, &h)| w * h)
            .sum::<f64>()
            + self.b2.data()[0];
        Ok(PairCache {
            q,
            a,
            rep,
            hidden,
            score,
        })
    }
}

fn backward_direction(
    cell: &GruCellParams,
    caches: &[GruCache],
    ids: &[usize],
    dh_last: &[f64],
    cell_grads: &mut GruCellParams,
    emb_grads: &mut Tensor,
) {
    let mut dh = dh_last.to_vec();
    for (step_cache, &id) in caches.iter().zip(ids.iter()).rev() {
        let (dx, dh_prev) = gru_backward(cell, step_cache, &dh, cell_grads);
        let row = emb_grads.row_mut(id);
        for (g, d) in row.iter_mut().zip(dx) {
            *g += d;
        }
        dh = dh_prev;
    }
}

struct SideCache {
    ids: Vec<usize>,
    rev_ids: Vec<usize>,
    fwd_caches: Vec<GruCache>,
    bwd_caches: Vec<GruCache>,
    summary: Vec<f64>,
}

struct PairCache {
    q: SideCache,
    a: SideCache,
    rep: Vec<f64>,
    hidden: Vec<f64>,
    score: f64,
}

impl ParamGroup for RnnMatchParams {
    fn tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = vec![("emb".to_string(), &self.emb)];
        for (prefix, cell) in [("fwd", &self.fwd), ("bwd", &self.bwd)] {
            for (name, t) in cell.tensors() {
                out.push((format!("{prefix}/{name}"), t));
            }
        }
        out.push(("w1".into(), &self.w1));
        out.push(("b1".into(), &self.b1));
        out.push(("w2".into(), &self.w2));
        out.push(("b2".into(), &self.b2));
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = vec![&mut self.emb];
        out.extend(self.fwd.tensors_mut());
        out.extend(self.bwd.tensors_mut());
        out.push(&mut self.w1);
        out.push(&mut self.b1);
        out.push(&mut self.w2);
        out.push(&mut self.b2);
        out
    }
}

impl PairwiseMatcher for RnnMatchParams {
    fn score(&self, question: &str, text: &str) -> Result<f64> {
        Ok(self.forward(question, text)?.score)
    }

    fn backprop(&self, question: &str, text: &str, dscore: f64, grads: &mut Self) -> Result<f64> {
        let cache = self.forward(question, text)?;
        let two_h = 2 * self.hidden_size();
        for (g, &h) in grads.w2.row_mut(0).iter_mut().zip(&cache.hidden) {
            *g += dscore * h;
        }
        grads.b2.data_mut()[0] += dscore;
        let dpre: Vec<f64> = self
            .w2
            .row(0)
            .iter()
            .zip(&cache.hidden)
            .map(|(&w, &h)| dscore * w * (1.0 - h * h))
            .collect();
        grads.w1.add_outer(&dpre, &cache.rep);
        grads.b1.add_slice(&dpre);
        let drep = self.w1.matvec_t(&dpre);
        let mut dq: Vec<f64> = drep[..two_h].to_vec();
        let mut da: Vec<f64> = drep[two_h..2 * two_h].to_vec();
        for i in 0..two_h {
            let dprod = drep[2 * two_h + i];
            dq[i] += dprod * cache.a.summary[i];
            da[i] += dprod * cache.q.summary[i];
        }
        self.backward_side(&cache.q, &dq, grads);
        self.backward_side(&cache.a, &da, grads);
        Ok(cache.score)
    }

    fn grad_holder(&self) -> Self {
        self.zeros_like()
    }
}

/// Recurrent relevance score of a question and an assertion; unbounded.
pub fn f_rnn(params: &RnnMatchParams, question: &str, assertion: &Assertion) -> Result<f64> {
    params.score(question, &assertion_text(assertion))
}
