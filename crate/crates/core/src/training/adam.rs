use super::GradientSet;
use crate::error::{Error, Result};
use crate::model::{ModelParams, Real};

/// Bias-corrected Adam with per-tensor moment accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<F> {
    pub first: ModelParams<F>,
    pub second: ModelParams<F>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl<F: Real> AdamState<F> {
    pub fn new(params: &ModelParams<F>) -> Self {
        AdamState {
            first: params.zeros_like(),
            second: params.zeros_like(),
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One Adam update in place.
///
/// Fails without touching `params` or `state` when any gradient is
/// non-finite; the error names the tensor and the 1-based update number.
pub fn adam_step<F: Real>(
    params: &mut ModelParams<F>,
    grads: &GradientSet<F>,
    state: &mut AdamState<F>,
    lr: f64,
) -> Result<()> {
    for (name, g) in grads.tensors() {
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient {
                tensor: name,
                batch: state.step as usize + 1,
            });
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (F::of_f64(state.beta1), F::of_f64(state.beta2));
    let c1 = F::of_f64(1.0 - state.beta1.powi(t));
    let c2 = F::of_f64(1.0 - state.beta2.powi(t));
    let lr = F::of_f64(lr);
    let eps = F::of_f64(state.eps);
    let one = F::one();

    let grads = grads.tensors();
    let mut first = state.first.tensors_mut();
    let mut second = state.second.tensors_mut();
    for (((_, mut p), (_, g)), ((_, m), (_, v))) in params
        .tensors_mut()
        .into_iter()
        .zip(grads)
        .zip(first.iter_mut().zip(second.iter_mut()))
    {
        ndarray::Zip::from(&mut p)
            .and(&g)
            .and(m)
            .and(v)
            .for_each(|p, &g, m, v| {
                *m = b1 * *m + (one - b1) * g;
                *v = b2 * *v + (one - b2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
            });
    }
    Ok(())
}
