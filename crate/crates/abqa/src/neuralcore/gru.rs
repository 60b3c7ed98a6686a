//! Gated recurrent unit cell: forward step and exact reverse-mode
//! gradients. One step maps (input x, previous hidden h) to the next
//! hidden state via update gate z, reset gate r, and candidate h̃:
//!
//!   z = σ(Wz·x + Uz·h + bz)
//!   r = σ(Wr·x + Ur·h + br)
//!   h̃ = tanh(Wh·x + Uh·(r⊙h) + bh)
//!   h' = (1−z)⊙h + z⊙h̃

use rand::Rng;

use crate::neuralcore::{sigmoid, ParamGroup, Tensor, INIT_SCALE};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct GruCellParams {
    pub wz: Tensor,
    pub uz: Tensor,
    pub bz: Tensor,
    pub wr: Tensor,
    pub ur: Tensor,
    pub br: Tensor,
    pub wh: Tensor,
    pub uh: Tensor,
    pub bh: Tensor,
}

impl GruCellParams {
    pub fn new(input_size: usize, hidden_size: usize, rng: &mut impl Rng) -> GruCellParams {
        let w = |rng: &mut _| Tensor::uniform(&[hidden_size, input_size], INIT_SCALE, rng);
        let u = |rng: &mut _| Tensor::uniform(&[hidden_size, hidden_size], INIT_SCALE, rng);
        GruCellParams {
            wz: w(rng),
            uz: u(rng),
            bz: Tensor::zeros(&[hidden_size]),
            wr: w(rng),
            ur: u(rng),
            br: Tensor::zeros(&[hidden_size]),
            wh: w(rng),
            uh: u(rng),
            bh: Tensor::zeros(&[hidden_size]),
        }
    }

    pub fn zeros(input_size: usize, hidden_size: usize) -> GruCellParams {
        GruCellParams {
            wz: Tensor::zeros(&[hidden_size, input_size]),
            uz: Tensor::zeros(&[hidden_size, hidden_size]),
            bz: Tensor::zeros(&[hidden_size]),
            wr: Tensor::zeros(&[hidden_size, input_size]),
            ur: Tensor::zeros(&[hidden_size, hidden_size]),
            br: Tensor::zeros(&[hidden_size]),
            wh: Tensor::zeros(&[hidden_size, input_size]),
            uh: Tensor::zeros(&[hidden_size, hidden_size]),
            bh: Tensor::zeros(&[hidden_size]),
        }
    }

    pub fn input_size(&self) -> usize {
        self.wz.shape()[1]
    }

    pub fn hidden_size(&self) -> usize {
        self.wz.shape()[0]
    }
}

impl ParamGroup for GruCellParams {
    fn tensors(&self) -> Vec<(String, &Tensor)> {
        vec![
            ("wz".into(), &self.wz),
            ("uz".into(), &self.uz),
            ("bz".into(), &self.bz),
            ("wr".into(), &self.wr),
            ("ur".into(), &self.ur),
            ("br".into(), &self.br),
            ("wh".into(), &self.wh),
            ("uh".into(), &self.uh),
            ("bh".into(), &self.bh),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![
            &mut self.wz,
            &mut self.uz,
            &mut self.bz,
            &mut self.wr,
            &mut self.ur,
            &mut self.br,
            &mut self.wh,
            &mut self.uh,
            &mut self.bh,
        ]
    }
}

/// Intermediate values of one forward step, needed for the backward pass.
#[derive(Debug, Clone)]
pub struct GruCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub z: Vec<f64>,
    pub r: Vec<f64>,
    pub h_cand: Vec<f64>,
}

/// One GRU step. Components of the output lie strictly between −1 and 1
/// whenever the previous hidden state's do.
pub fn gru_step(p: &GruCellParams, x: &Tensor, h_prev: &Tensor) -> Result<(Tensor, GruCache)> {
    let d = p.input_size();
    let h = p.hidden_size();
    x.expect_shape(&[d], "gru input")?;
    h_prev.expect_shape(&[h], "gru hidden state")?;
    x.assert_finite("gru input")?;
    h_prev.assert_finite("gru hidden state")?;

    let xv = x.data();
    let hv = h_prev.data();

    let mut z = p.wz.matvec(xv);
    let zu = p.uz.matvec(hv);
    for i in 0..h {
        z[i] = sigmoid(z[i] + zu[i] + p.bz.data()[i]);
    }
    let mut r = p.wr.matvec(xv);
    let ru = p.ur.matvec(hv);
    for i in 0..h {
        r[i] = sigmoid(r[i] + ru[i] + p.br.data()[i]);
    }
    let rh: Vec<f64> = r.iter().zip(hv).map(|(a, b)| a * b).collect();
    let mut h_cand = p.wh.matvec(xv);
    let hu = p.uh.matvec(&rh);
    for i in 0..h {
        h_cand[i] = (h_cand[i] + hu[i] + p.bh.data()[i]).tanh();
    }
    let out: Vec<f64> = (0..h)
        .map(|i| (1.0 - z[i]) * hv[i] + z[i] * h_cand[i])
        .collect();
    let cache = GruCache {
        x: xv.to_vec(),
        h_prev: hv.to_vec(),
        z,
        r,
        h_cand,
    };
    Ok((Tensor::from_vec(&[h], out)?, cache))
}

/// Reverse-mode gradients of one step. Accumulates parameter gradients into
/// `grads` and returns (d loss/d x, d loss/d h_prev).
pub fn gru_backward(
    p: &GruCellParams,
    cache: &GruCache,
    dh_out: &[f64],
    grads: &mut GruCellParams,
) -> (Vec<f64>, Vec<f64>) {
    let h = p.hidden_size();
    debug_assert_eq!(dh_out.len(), h);
    let GruCache {
        x,
        h_prev,
        z,
        r,
        h_cand,
    } = cache;

    let mut dh_prev: Vec<f64> = (0..h).map(|i| dh_out[i] * (1.0 - z[i])).collect();
    let dz: Vec<f64> = (0..h).map(|i| dh_out[i] * (h_cand[i] - h_prev[i])).collect();
    let dcand: Vec<f64> = (0..h).map(|i| dh_out[i] * z[i]).collect();

    // Candidate path through tanh.
    let da_h: Vec<f64> = (0..h).map(|i| dcand[i] * (1.0 - h_cand[i] * h_cand[i])).collect();
    let rh: Vec<f64> = r.iter().zip(h_prev).map(|(a, b)| a * b).collect();
    grads.wh.add_outer(&da_h, x);
    grads.uh.add_outer(&da_h, &rh);
    grads.bh.add_slice(&da_h);
    let drh = p.uh.matvec_t(&da_h);
    let dr: Vec<f64> = (0..h).map(|i| drh[i] * h_prev[i]).collect();
    for i in 0..h {
        dh_prev[i] += drh[i] * r[i];
    }

    // Gates through the logistic.
    let da_z: Vec<f64> = (0..h).map(|i| dz[i] * z[i] * (1.0 - z[i])).collect();
    grads.wz.add_outer(&da_z, x);
    grads.uz.add_outer(&da_z, h_prev);
    grads.bz.add_slice(&da_z);
    let uz_back = p.uz.matvec_t(&da_z);

    let da_r: Vec<f64> = (0..h).map(|i| dr[i] * r[i] * (1.0 - r[i])).collect();
    grads.wr.add_outer(&da_r, x);
    grads.ur.add_outer(&da_r, h_prev);
    grads.br.add_slice(&da_r);
    let ur_back = p.ur.matvec_t(&da_r);

    for i in 0..h {
        dh_prev[i] += uz_back[i] + ur_back[i];
    }

    let mut dx = p.wz.matvec_t(&da_z);
    let rx = p.wr.matvec_t(&da_r);
    let hx = p.wh.matvec_t(&da_h);
    for i in 0..dx.len() {
        dx[i] += rx[i] + hx[i];
    }
    (dx, dh_prev)
}
