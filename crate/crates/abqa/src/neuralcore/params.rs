//! Uniform access to the tensors of a parameterized component. Optimizers,
//! checkpoints, and the gradient checker all operate through this trait; a
//! gradient is simply a second instance of the same parameter struct.

use crate::neuralcore::Tensor;
use crate::{Error, Result};

pub trait ParamGroup {
    /// Named tensors in a fixed order. The order must match
    /// [`ParamGroup::tensors_mut`] and be stable across calls.
    fn tensors(&self) -> Vec<(String, &Tensor)>;

    /// Mutable views of the same tensors, in the same order.
    fn tensors_mut(&mut self) -> Vec<&mut Tensor>;

    /// Total number of scalar parameters.
    fn param_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// Adds `scale * other` tensor-wise; shapes must match.
    fn accumulate(&mut self, other: &Self, scale: f64)
    where
        Self: Sized,
    {
        let src = other.tensors();
        for (dst, (_, s)) in self.tensors_mut().into_iter().zip(src) {
            debug_assert_eq!(dst.shape(), s.shape());
            for (d, v) in dst.data_mut().iter_mut().zip(s.data()) {
                *d += scale * v;
            }
        }
    }

    /// Resets every tensor to zero, preserving shapes.
    fn zero(&mut self) {
        for t in self.tensors_mut() {
            t.data_mut().fill(0.0);
        }
    }

    fn assert_finite(&self, what: &str) -> Result<()> {
        for (name, t) in self.tensors() {
            t.assert_finite(&format!("{what}/{name}"))
                .map_err(|e| Error::NonFinite(e.to_string()))?;
        }
        Ok(())
    }
}
