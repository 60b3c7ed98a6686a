//! Finite-difference gradient verification, usable against any parameter
//! group. Central differences with step h; a check passes when
//! |analytic − numeric| ≤ tol · max(|analytic|, |numeric|, 1e-6).

use crate::neuralcore::ParamGroup;
use crate::{Error, Result};

/// Verifies `analytic` against central finite differences of `loss` at the
/// current `params`. Parameters are restored exactly after probing. Returns
/// the first violation as an error naming the tensor and flat index.
pub fn check_gradients<P: ParamGroup>(
    params: &mut P,
    analytic: &P,
    mut loss: impl FnMut(&P) -> f64,
    h: f64,
    tol: f64,
) -> Result<()> {
    let names: Vec<String> = analytic.tensors().iter().map(|(n, _)| n.clone()).collect();
    let sizes: Vec<usize> = analytic.tensors().iter().map(|(_, t)| t.len()).collect();
    for (ti, (name, size)) in names.iter().zip(&sizes).enumerate() {
        for j in 0..*size {
            let orig = params.tensors()[ti].1.data()[j];
            params.tensors_mut()[ti].data_mut()[j] = orig + h;
            let lp = loss(params);
            params.tensors_mut()[ti].data_mut()[j] = orig - h;
            let lm = loss(params);
            params.tensors_mut()[ti].data_mut()[j] = orig;
            let numeric = (lp - lm) / (2.0 * h);
            let a = analytic.tensors()[ti].1.data()[j];
            let denom = a.abs().max(numeric.abs()).max(1e-6);
            if (a - numeric).abs() > tol * denom {
                return Err(Error::Model(format!(
                    "gradient mismatch at {name}[{j}]: analytic {a:.8e}, numeric {numeric:.8e}"
                )));
            }
        }
    }
    Ok(())
}
