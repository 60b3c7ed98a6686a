//! Additive attention: scores e_t = vᵀ·tanh(Wq·query + Wk·key_t), weights
//! by softmax over t, context as the weight-averaged key. Query and key
//! widths may differ; the context has the key width.

use rand::Rng;

use crate::neuralcore::tensor::dot;
use crate::neuralcore::{softmax, ParamGroup, Tensor, INIT_SCALE};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    pub wq: Tensor,
    pub wk: Tensor,
    pub v: Tensor,
}

impl AttentionParams {
    pub fn new(query_size: usize, key_size: usize, attn_size: usize, rng: &mut impl Rng) -> Self {
        AttentionParams {
            wq: Tensor::uniform(&[attn_size, query_size], INIT_SCALE, rng),
            wk: Tensor::uniform(&[attn_size, key_size], INIT_SCALE, rng),
            v: Tensor::uniform(&[attn_size], INIT_SCALE, rng),
        }
    }

    pub fn zeros(query_size: usize, key_size: usize, attn_size: usize) -> Self {
        AttentionParams {
            wq: Tensor::zeros(&[attn_size, query_size]),
            wk: Tensor::zeros(&[attn_size, key_size]),
            v: Tensor::zeros(&[attn_size]),
        }
    }

    pub fn attn_size(&self) -> usize {
        self.v.shape()[0]
    }

    pub fn query_size(&self) -> usize {
        self.wq.shape()[1]
    }

    pub fn key_size(&self) -> usize {
        self.wk.shape()[1]
    }
}

impl ParamGroup for AttentionParams {
    fn tensors(&self) -> Vec<(String, &Tensor)> {
        vec![
            ("wq".into(), &self.wq),
            ("wk".into(), &self.wk),
            ("v".into(), &self.v),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.wq, &mut self.wk, &mut self.v]
    }
}

#[derive(Debug, Clone)]
pub struct AttentionCache {
    query: Vec<f64>,
    keys: Tensor,
    /// tanh(Wq·q + Wk·k_t) per position.
    m: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

/// Computes attention weights (softmax over positions, summing to 1) and
/// the context vector Σ_t w_t·key_t.
pub fn attention(
    p: &AttentionParams,
    query: &Tensor,
    keys: &Tensor,
) -> Result<(Tensor, Tensor, AttentionCache)> {
    query.expect_shape(&[p.query_size()], "attention query")?;
    if keys.shape().len() != 2 || keys.shape()[1] != p.key_size() {
        return Err(Error::Shape(format!(
            "attention keys: expected [T, {}], got {:?}",
            p.key_size(),
            keys.shape()
        )));
    }
    let t_len = keys.rows();
    if t_len == 0 {
        return Err(Error::EmptyInput("attention over empty key sequence".into()));
    }
    query.assert_finite("attention query")?;
    keys.assert_finite("attention keys")?;

    let qproj = p.wq.matvec(query.data());
    let mut m = Vec::with_capacity(t_len);
    let mut scores = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let kproj = p.wk.matvec(keys.row(t));
        let mt: Vec<f64> = qproj.iter().zip(&kproj).map(|(a, b)| (a + b).tanh()).collect();
        scores.push(dot(p.v.data(), &mt));
        m.push(mt);
    }
    let weights = softmax(&scores);
    let k_size = p.key_size();
    let mut context = vec![0.0; k_size];
    for t in 0..t_len {
        for (c, &k) in context.iter_mut().zip(keys.row(t)) {
            *c += weights[t] * k;
        }
    }
    let cache = AttentionCache {
        query: query.data().to_vec(),
        keys: keys.clone(),
        m,
        weights: weights.clone(),
    };
    Ok((
        Tensor::from_vec(&[t_len], weights)?,
        Tensor::from_vec(&[k_size], context)?,
        cache,
    ))
}

/// Reverse-mode gradients through attention. `dweights` covers losses that
/// read the weights directly; `dcontext` covers the context path. Parameter
/// gradients accumulate into `grads`; returns (d query, d keys).
pub fn attention_backward(
    p: &AttentionParams,
    cache: &AttentionCache,
    dweights: Option<&[f64]>,
    dcontext: &[f64],
    grads: &mut AttentionParams,
) -> (Vec<f64>, Tensor) {
    let t_len = cache.keys.rows();
    let k_size = p.key_size();
    let mut dkeys = Tensor::zeros(&[t_len, k_size]);

    // Total gradient on each weight: explicit plus via the context sum.
    let mut dw = vec![0.0; t_len];
    for t in 0..t_len {
        if let Some(dws) = dweights {
            dw[t] += dws[t];
        }
        dw[t] += dot(dcontext, cache.keys.row(t));
        for (dk, &dc) in dkeys.row_mut(t).iter_mut().zip(dcontext) {
            *dk += cache.weights[t] * dc;
        }
    }

    // Softmax backward.
    let inner: f64 = (0..t_len).map(|t| cache.weights[t] * dw[t]).sum();
    let de: Vec<f64> = (0..t_len).map(|t| cache.weights[t] * (dw[t] - inner)).collect();

    let mut dqproj = vec![0.0; p.attn_size()];
    for t in 0..t_len {
        let mt = &cache.m[t];
        // dv and the tanh pre-activation.
        for (gv, &mv) in grads.v.data_mut().iter_mut().zip(mt) {
            *gv += de[t] * mv;
        }
        let dpre: Vec<f64> = mt
            .iter()
            .zip(p.v.data())
            .map(|(&mv, &vv)| de[t] * vv * (1.0 - mv * mv))
            .collect();
        grads.wk.add_outer(&dpre, cache.keys.row(t));
        let dk = p.wk.matvec_t(&dpre);
        for (slot, add) in dkeys.row_mut(t).iter_mut().zip(dk) {
            *slot += add;
        }
        for (acc, d) in dqproj.iter_mut().zip(&dpre) {
            *acc += d;
        }
    }
    grads.wq.add_outer(&dqproj, &cache.query);
    let dquery = p.wq.matvec_t(&dqproj);
    (dquery, dkeys)
}
