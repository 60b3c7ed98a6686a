//! 1-D convolution over a token sequence followed by max pooling over
//! time. Windows of k consecutive rows wrap around the sequence end (the
//! k−1 padding rows are the sequence head), so every position contributes
//! exactly one window and repeating a sequence leaves the pooled output
//! unchanged.

use rand::Rng;

use crate::neuralcore::tensor::dot;
use crate::neuralcore::{ParamGroup, Tensor, INIT_SCALE};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Conv1dParams {
    /// Filter bank: one row of length window·input_dim per filter.
    pub w: Tensor,
    pub b: Tensor,
    pub window: usize,
}

impl Conv1dParams {
    pub fn new(input_dim: usize, window: usize, filters: usize, rng: &mut impl Rng) -> Self {
        Conv1dParams {
            w: Tensor::uniform(&[filters, window * input_dim], INIT_SCALE, rng),
            b: Tensor::zeros(&[filters]),
            window,
        }
    }

    pub fn zeros(input_dim: usize, window: usize, filters: usize) -> Self {
        Conv1dParams {
            w: Tensor::zeros(&[filters, window * input_dim]),
            b: Tensor::zeros(&[filters]),
            window,
        }
    }

    pub fn filters(&self) -> usize {
        self.w.shape()[0]
    }

    pub fn input_dim(&self) -> usize {
        self.w.shape()[1] / self.window
    }
}

impl ParamGroup for Conv1dParams {
    fn tensors(&self) -> Vec<(String, &Tensor)> {
        vec![("w".into(), &self.w), ("b".into(), &self.b)]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.w, &mut self.b]
    }
}

#[derive(Debug, Clone)]
pub struct Conv1dCache {
    seq: Tensor,
    /// tanh activations, T×F.
    acts: Vec<Vec<f64>>,
    /// Winning window index per filter; lowest index on ties.
    argmax: Vec<usize>,
}

fn window_at(seq: &Tensor, t: usize, k: usize) -> Vec<f64> {
    let rows = seq.rows();
    let mut w = Vec::with_capacity(k * seq.cols());
    for o in 0..k {
        w.extend_from_slice(seq.row((t + o) % rows));
    }
    w
}

/// Convolution + tanh + max-over-time pooling. Returns one value per
/// filter and the cache for the backward pass.
pub fn conv1d_maxpool(p: &Conv1dParams, seq: &Tensor) -> Result<(Tensor, Conv1dCache)> {
    if seq.shape().len() != 2 || seq.shape()[1] != p.input_dim() {
        return Err(Error::Shape(format!(
            "conv input: expected [T, {}], got {:?}",
            p.input_dim(),
            seq.shape()
        )));
    }
    let t_len = seq.rows();
    if t_len == 0 {
        return Err(Error::EmptyInput("convolution over empty sequence".into()));
    }
    seq.assert_finite("conv input")?;

    let f_count = p.filters();
    let mut acts = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let win = window_at(seq, t, p.window);
        let act: Vec<f64> = (0..f_count)
            .map(|f| (dot(p.w.row(f), &win) + p.b.data()[f]).tanh())
            .collect();
        acts.push(act);
    }
    let mut pooled = vec![f64::NEG_INFINITY; f_count];
    let mut argmax = vec![0usize; f_count];
    for (t, act) in acts.iter().enumerate() {
        for f in 0..f_count {
            if act[f] > pooled[f] {
                pooled[f] = act[f];
                argmax[f] = t;
            }
        }
    }
    Ok((
        Tensor::from_vec(&[f_count], pooled)?,
        Conv1dCache {
            seq: seq.clone(),
            acts,
            argmax,
        },
    ))
}

/// Gradients of the pooled output: parameter gradients accumulate into
/// `grads`; returns d loss / d sequence.
pub fn conv1d_maxpool_backward(
    p: &Conv1dParams,
    cache: &Conv1dCache,
    dout: &[f64],
    grads: &mut Conv1dParams,
) -> Tensor {
    let t_len = cache.seq.rows();
    let d = p.input_dim();
    let mut dseq = Tensor::zeros(&[t_len, d]);
    for f in 0..p.filters() {
        let t = cache.argmax[f];
        let a = cache.acts[t][f];
        let da = dout[f] * (1.0 - a * a);
        if da == 0.0 {
            continue;
        }
        let win = window_at(&cache.seq, t, p.window);
        for (i, &x) in win.iter().enumerate() {
            grads.w.row_mut(f)[i] += da * x;
        }
        grads.b.data_mut()[f] += da;
        for o in 0..p.window {
            let row = dseq.row_mut((t + o) % t_len);
            let wf = &p.w.row(f)[o * d..(o + 1) * d];
            for (r, &wv) in row.iter_mut().zip(wf) {
                *r += da * wv;
            }
        }
    }
    dseq
}
