//! Minimal neural substrate shared by the neural matchers and the
//! generative decoder: tensors, a GRU cell, 1-D convolution with max
//! pooling, additive attention, softmax/cross-entropy, cosine, margin
//! ranking loss, SGD and AdaDelta, named-tensor checkpoints, and a
//! finite-difference gradient checker.
//!
//! Everything runs in f64 on the CPU with batch size 1. Forward evaluation
//! on frozen parameters is pure; training mutates parameters from a single
//! thread.

mod attention;
mod checkpoint;
mod conv;
mod gradcheck;
mod gru;
mod math;
mod optim;
mod params;
mod tensor;

pub use attention::{attention, attention_backward, AttentionCache, AttentionParams};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use conv::{conv1d_maxpool, conv1d_maxpool_backward, Conv1dCache, Conv1dParams};
pub use gradcheck::check_gradients;
pub use gru::{gru_backward, gru_step, GruCache, GruCellParams};
pub use math::{
    cosine, cosine_backward, cross_entropy, margin_rank_loss, sigmoid, softmax, tanh_vec,
};
pub use optim::{AdaDelta, Optimizer, Sgd};
pub use params::ParamGroup;
pub use tensor::Tensor;

/// Half-width of the uniform range used by all parameter initializers.
pub const INIT_SCALE: f64 = 0.08;
