//! Reverse-mode gradients for the fixed network, replaying a [`ForwardTrace`].

use std::ops::{Deref, DerefMut};

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};
use crate::graphs::GraphBatch;
use crate::model::forward_internals::{block_matmul, flat_features};
use crate::model::{ForwardTrace, Mlp, MlpTrace, ModelParams, Real};

/// `∂ℒ/∂θ` for every parameter tensor, shape-congruent with [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet<F>(pub ModelParams<F>);

impl<F> Deref for GradientSet<F> {
    type Target = ModelParams<F>;
    fn deref(&self) -> &ModelParams<F> {
        &self.0
    }
}

impl<F> DerefMut for GradientSet<F> {
    fn deref_mut(&mut self) -> &mut ModelParams<F> {
        &mut self.0
    }
}

impl<F: Real> GradientSet<F> {
    pub fn global_norm(&self) -> F {
        self.tensors()
            .iter()
            .flat_map(|(_, t)| t.iter().map(|v| *v * *v).collect::<Vec<_>>())
            .fold(F::zero(), |a, b| a + b)
            .sqrt()
    }

    /// Rescales so the global L2 norm is at most `max_norm`.
    pub fn clip_global_norm(&mut self, max_norm: F) {
        let norm = self.global_norm();
        if norm > max_norm {
            let scale = max_norm / norm;
            for (_, mut t) in self.tensors_mut() {
                t.mapv_inplace(|v| v * scale);
            }
        }
    }
}

fn sum_rows<F: Real>(m: &Array2<F>) -> ndarray::Array1<F> {
    m.sum_axis(Axis(0))
}

fn mlp_backward<F: Real>(
    mlp: &Mlp<F>,
    trace: &MlpTrace<F>,
    d_out: Array2<F>,
    grads: &mut Mlp<F>,
) -> Array2<F> {
    let mut d = d_out;
    for k in (0..mlp.layers.len()).rev() {
        let input = &trace.inputs[k];
        grads.layers[k].weight += &input.t().dot(&d);
        grads.layers[k].bias += &sum_rows(&d);
        let d_in = d.dot(&mlp.layers[k].weight.t());
        d = if k > 0 {
            // inputs[k] = tanh(previous layer)
            d_in * &input.mapv(|y| F::one() - y * y)
        } else {
            d_in
        };
    }
    d
}

/// Gradients of the mean cross-entropy in `trace` with respect to `params`,
/// back through the readout and every unrolled interaction step.
pub fn backward<F: Real>(
    trace: &ForwardTrace<F>,
    batch: &GraphBatch<F>,
    params: &ModelParams<F>,
) -> Result<GradientSet<F>> {
    let b = trace.batch_size;
    let n = trace.max_nodes;
    let hidden = params.hidden();
    let classes = params.num_classes();
    if batch.len() != b
        || batch.max_nodes() != n
        || trace.logits.dim() != (b, classes)
        || trace.states.len() != trace.steps.len() + 1
        || trace.states[0].dim() != (b * n, hidden)
    {
        return Err(Error::Shape("trace does not match batch/params".into()));
    }

    let mut grads = GradientSet(params.zeros_like());
    let inv_b = F::one() / F::from_usize(b).unwrap();

    // softmax + cross-entropy
    let mut d_logits = trace.probabilities.clone();
    for (i, &y) in batch.labels.iter().enumerate() {
        d_logits[[i, y]] -= F::one();
    }
    d_logits.mapv_inplace(|v| v * inv_b);
    grads.classifier.weight = trace.classifier_input.t().dot(&d_logits);
    grads.classifier.bias = sum_rows(&d_logits);
    let mut d_pooled = d_logits.dot(&params.classifier.weight.t());
    if let Some(m) = &trace.readout_dropout {
        d_pooled *= m;
    }

    // mean + max pooling
    let ro = &trace.readout;
    let mask = &trace.mask;
    let mut d_node = Array2::<F>::zeros((b * n, hidden));
    for g in 0..b {
        let rows = g * n..(g + 1) * n;
        let count = rows.clone().filter(|&v| mask[[v, 0]] > F::zero()).count();
        let inv = F::one() / F::from_usize(count).unwrap();
        for k in 0..hidden {
            let dp = d_pooled[[g, k]];
            for v in rows.clone() {
                if mask[[v, 0]] > F::zero() {
                    d_node[[v, k]] += dp * inv;
                }
            }
            let am = ro.argmax[[g, k]];
            d_node[[am, k]] += dp;
        }
    }

    // node_out = σ(f1) ⊙ tanh(f2) ⊙ mask
    let d_node = d_node * mask;
    let d_att = &d_node * &ro.transform;
    let d_tr = &d_node * &ro.attention;
    let d_f1 = d_att * &ro.attention.mapv(|s| s * (F::one() - s));
    let d_f2 = d_tr * &ro.transform.mapv(|t| F::one() - t * t);
    let mut dh = mlp_backward(&params.f1, &ro.f1, d_f1, &mut grads.f1)
        + mlp_backward(&params.f2, &ro.f2, d_f2, &mut grads.f2);

    // gated steps, newest first
    for s in (0..trace.steps.len()).rev() {
        let st = &trace.steps[s];
        let h_prev = &trace.states[s];
        let d = dh * mask;
        let (z, r, c) = (&st.update_gate, &st.reset_gate, &st.candidate);

        let d_cand = &d * z;
        let d_z = &d * &(c - h_prev);
        let mut d_prev = &d * &z.mapv(|v| F::one() - v);

        let d_pre_h = d_cand * &c.mapv(|v| F::one() - v * v);
        grads.w_h += &st.message.t().dot(&d_pre_h);
        grads.u_h += &st.reset_state.t().dot(&d_pre_h);
        grads.b_h += &sum_rows(&d_pre_h);
        let mut d_msg = d_pre_h.dot(&params.w_h.t());
        let d_rh = d_pre_h.dot(&params.u_h.t());
        let d_r = &d_rh * h_prev;
        d_prev += &(&d_rh * r);

        let d_pre_z = d_z * &z.mapv(|v| v * (F::one() - v));
        grads.w_z += &st.message.t().dot(&d_pre_z);
        grads.u_z += &h_prev.t().dot(&d_pre_z);
        grads.b_z += &sum_rows(&d_pre_z);
        d_msg += &d_pre_z.dot(&params.w_z.t());
        d_prev += &d_pre_z.dot(&params.u_z.t());

        let d_pre_r = d_r * &r.mapv(|v| v * (F::one() - v));
        grads.w_r += &st.message.t().dot(&d_pre_r);
        grads.u_r += &h_prev.t().dot(&d_pre_r);
        grads.b_r += &sum_rows(&d_pre_r);
        d_msg += &d_pre_r.dot(&params.w_r.t());
        d_prev += &d_pre_r.dot(&params.u_r.t());

        grads.w_a += &st.aggregated.t().dot(&d_msg);
        let d_agg = d_msg.dot(&params.w_a.t());
        d_prev += &block_matmul(&batch.adjacency, &d_agg, true);

        dh = d_prev;
    }

    // h⁰ = mask ⊙ dropout(x · P + p)
    let mut d0 = dh * mask;
    if let Some(m) = &trace.input_dropout {
        d0 *= m;
    }
    if let Some(proj) = grads.input_proj.as_mut() {
        let x = flat_features(batch);
        proj.weight = x.t().dot(&d0);
        proj.bias = sum_rows(&d0);
    }
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{forward_eval, HyperParams};
    use ndarray::Array3;

    /// With zero input projection `h⁰ = 0`, so `r ⊙ h⁰ = 0` and the message
    /// `A h⁰ W_a` vanish: `U_r`, `U_z`, `U_h`, `W_r`, `W_z` and `W_a` get
    /// exactly zero gradient at `t = 1`.
    #[test]
    fn inactive_paths_have_zero_gradient() {
        let hyper = HyperParams {
            input_dim: 3,
            hidden: 4,
            steps: 1,
            dropout: 0.0,
            ..Default::default()
        };
        let mut params: ModelParams<f64> = ModelParams::init(&hyper, 2);
        params.input_proj.as_mut().unwrap().weight.fill(0.0);
        params.b_h.fill(0.3);
        let features = Array3::from_shape_fn((1, 3, 3), |(_, i, j)| (i * 3 + j) as f64 * 0.1 - 0.3);
        let mut adj = Array3::zeros((1, 3, 3));
        adj[[0, 0, 1]] = 1.0;
        adj[[0, 1, 0]] = 1.0;
        let batch = GraphBatch::from_parts(features, adj, Array2::ones((1, 3)), vec![1]).unwrap();
        let trace = forward_eval(&batch, &params, &hyper).unwrap();
        let g = backward(&trace, &batch, &params).unwrap();
        assert!(g.u_r.iter().all(|v| *v == 0.0));
        assert!(g.u_h.iter().all(|v| *v == 0.0));
        assert!(g.u_z.iter().all(|v| *v == 0.0));
        assert!(g.w_r.iter().all(|v| *v == 0.0));
        assert!(g.w_a.iter().all(|v| *v == 0.0));
        assert!(g.w_z.iter().all(|v| *v == 0.0));
        assert!(g.b_z.iter().any(|v| *v != 0.0));
        assert!(g.classifier.weight.iter().any(|v| *v != 0.0));
    }

    #[test]
    fn saturated_correct_prediction_has_vanishing_gradient() {
        let hyper = HyperParams {
            input_dim: 2,
            hidden: 2,
            steps: 1,
            dropout: 0.0,
            ..Default::default()
        };
        let mut params: ModelParams<f64> = ModelParams::init(&hyper, 2);
        let features = Array3::from_elem((1, 2, 2), 0.3);
        let batch = GraphBatch::from_parts(
            features,
            Array3::zeros((1, 2, 2)),
            Array2::ones((1, 2)),
            vec![0],
        )
        .unwrap();
        let mut norms = Vec::new();
        for scale in [1.0, 10.0, 40.0] {
            params.classifier.bias[0] = scale;
            params.classifier.bias[1] = -scale;
            let trace = forward_eval(&batch, &params, &hyper).unwrap();
            norms.push(backward(&trace, &batch, &params).unwrap().global_norm());
        }
        assert!(norms[0] > norms[1] && norms[1] > norms[2]);
        assert!(norms[2] < 1e-30);
    }

    #[test]
    fn clipping() {
        let hyper = HyperParams {
            input_dim: 2,
            hidden: 2,
            ..Default::default()
        };
        let mut g = GradientSet(ModelParams::<f64>::init(&hyper, 2));
        let before = g.global_norm();
        g.clip_global_norm(before * 0.5);
        assert!((g.global_norm() - before * 0.5).abs() < 1e-12);
        g.clip_global_norm(before * 10.0);
        assert!((g.global_norm() - before * 0.5).abs() < 1e-12);
    }
}
