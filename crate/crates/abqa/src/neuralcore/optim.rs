//! Gradient-descent optimizers over parameter groups: plain SGD and
//! AdaDelta with per-element squared-gradient and squared-update
//! accumulators.

use crate::neuralcore::ParamGroup;
use crate::{Error, Result};

/// Fixed-rate gradient descent: params ← params − lr·grads.
#[derive(Debug, Clone)]
pub struct Sgd {
    pub lr: f64,
}

impl Sgd {
    pub fn new(lr: f64) -> Result<Sgd> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {lr}")));
        }
        Ok(Sgd { lr })
    }

    pub fn step<P: ParamGroup>(&self, params: &mut P, grads: &P) -> Result<()> {
        grads.assert_finite("sgd gradients")?;
        params.accumulate(grads, -self.lr);
        Ok(())
    }
}

/// AdaDelta (decay ρ, stabilizer ε):
///   E[g²] ← ρ·E[g²] + (1−ρ)·g²
///   Δ = −(√(E[Δ²]+ε) / √(E[g²]+ε))·g
///   E[Δ²] ← ρ·E[Δ²] + (1−ρ)·Δ²
///   params += Δ
#[derive(Debug, Clone)]
pub struct AdaDelta {
    pub rho: f64,
    pub eps: f64,
    acc_grad: Vec<Vec<f64>>,
    acc_update: Vec<Vec<f64>>,
}

impl AdaDelta {
    pub fn new(rho: f64, eps: f64) -> Result<AdaDelta> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::Config(format!("AdaDelta rho must be in (0,1), got {rho}")));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Config(format!("AdaDelta eps must be positive, got {eps}")));
        }
        Ok(AdaDelta {
            rho,
            eps,
            acc_grad: Vec::new(),
            acc_update: Vec::new(),
        })
    }

    pub fn step<P: ParamGroup>(&mut self, params: &mut P, grads: &P) -> Result<()> {
        grads.assert_finite("adadelta gradients")?;
        let grad_tensors = grads.tensors();
        if self.acc_grad.is_empty() {
            self.acc_grad = grad_tensors.iter().map(|(_, t)| vec![0.0; t.len()]).collect();
            self.acc_update = self.acc_grad.clone();
        }
        if self.acc_grad.len() != grad_tensors.len() {
            return Err(Error::Shape(
                "AdaDelta state does not match the parameter group".into(),
            ));
        }
        let mut param_tensors = params.tensors_mut();
        for (ti, (_, g)) in grad_tensors.iter().enumerate() {
            let eg = &mut self.acc_grad[ti];
            let ed = &mut self.acc_update[ti];
            if eg.len() != g.len() {
                return Err(Error::Shape(
                    "AdaDelta state does not match the parameter group".into(),
                ));
            }
            let pdata = param_tensors[ti].data_mut();
            for (j, &gj) in g.data().iter().enumerate() {
                eg[j] = self.rho * eg[j] + (1.0 - self.rho) * gj * gj;
                let delta = -((ed[j] + self.eps).sqrt() / (eg[j] + self.eps).sqrt()) * gj;
                ed[j] = self.rho * ed[j] + (1.0 - self.rho) * delta * delta;
                pdata[j] += delta;
            }
        }
        Ok(())
    }
}

/// Either optimizer behind one interface, for callers configured at runtime.
#[derive(Debug, Clone)]
pub enum Optimizer {
    Sgd(Sgd),
    AdaDelta(AdaDelta),
}

impl Optimizer {
    pub fn step<P: ParamGroup>(&mut self, params: &mut P, grads: &P) -> Result<()> {
        match self {
            Optimizer::Sgd(o) => o.step(params, grads),
            Optimizer::AdaDelta(o) => o.step(params, grads),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralcore::Tensor;

    struct One {
        t: Tensor,
    }

    impl ParamGroup for One {
        fn tensors(&self) -> Vec<(String, &Tensor)> {
            vec![("t".into(), &self.t)]
        }
        fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
            vec![&mut self.t]
        }
    }

    fn scalar(v: f64) -> One {
        One {
            t: Tensor::from_vec(&[1], vec![v]).unwrap(),
        }
    }

    #[test]
    fn sgd_moves_against_the_gradient() {
        let mut p = scalar(1.0);
        Sgd::new(0.1).unwrap().step(&mut p, &scalar(2.0)).unwrap();
        assert!((p.t.data()[0] - 0.8).abs() < 1e-12);
        assert!(Sgd::new(0.0).is_err());
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut p = scalar(0.3);
        let mut opt = AdaDelta::new(0.95, 1e-6).unwrap();
        opt.step(&mut p, &scalar(0.0)).unwrap();
        assert_eq!(p.t.data()[0], 0.3);
    }

    #[test]
    fn first_step_matches_hand_substitution() {
        // g=1, ρ=0.95, ε=1e-6: E[g²]=0.05, Δ=−√ε/√(0.05+ε) ≈ −4.47e-3.
        let mut p = scalar(0.0);
        let mut opt = AdaDelta::new(0.95, 1e-6).unwrap();
        opt.step(&mut p, &scalar(1.0)).unwrap();
        let expected = -(1e-6f64).sqrt() / (0.05f64 + 1e-6).sqrt();
        assert!((p.t.data()[0] - expected).abs() < 1e-15);
        assert!((p.t.data()[0] - (-4.47e-3)).abs() < 1e-4);
    }

    #[test]
    fn constant_gradient_step_size_converges() {
        // With g ≡ 1 the update accumulator grows by (1−ρ)ε per step, so
        // |Δ_k| ≈ √((1−ρ)εk) rises monotonically and its per-step change
        // decays like 1/√k, dropping below 1e-6 around k = 12_500.
        let mut p = scalar(0.0);
        let mut opt = AdaDelta::new(0.95, 1e-6).unwrap();
        let g = scalar(1.0);
        let mut prev_value = 0.0f64;
        let mut prev_delta = 0.0f64;
        let mut last_change = f64::INFINITY;
        for step in 0..20_000 {
            opt.step(&mut p, &g).unwrap();
            let delta = p.t.data()[0] - prev_value;
            prev_value = p.t.data()[0];
            if step > 0 {
                assert!(delta.abs() >= prev_delta.abs(), "|Δ| shrank at step {step}");
                last_change = (delta - prev_delta).abs();
            }
            prev_delta = delta;
        }
        assert!(last_change < 1e-6, "step size still moving by {last_change}");
    }

    #[test]
    fn non_finite_gradients_are_rejected() {
        let mut p = scalar(0.0);
        let mut opt = AdaDelta::new(0.95, 1e-6).unwrap();
        assert!(opt.step(&mut p, &scalar(f64::NAN)).is_err());
        assert!(Sgd::new(0.1).unwrap().step(&mut p, &scalar(f64::INFINITY)).is_err());
        assert!(AdaDelta::new(1.5, 1e-6).is_err());
        assert!(AdaDelta::new(0.9, 0.0).is_err());
    }
}
