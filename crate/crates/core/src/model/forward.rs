use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, Array3, Axis, Zip};
use rand::Rng;

use super::{Affine, HyperParams, Mlp, ModelParams, Real};
use crate::error::{Error, Result};
use crate::graphs::GraphBatch;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Intermediates of one gated interaction step.
#[derive(Debug, Clone)]
pub struct StepTrace<F> {
    /// `A · h` before the message weight.
    pub aggregated: Array2<F>,
    /// Message `a = A · h · W_a`.
    pub message: Array2<F>,
    pub update_gate: Array2<F>,
    pub reset_gate: Array2<F>,
    /// `r ⊙ h`
    pub reset_state: Array2<F>,
    pub candidate: Array2<F>,
}

#[derive(Debug, Clone)]
pub struct MlpTrace<F> {
    /// Input of every layer; `inputs[0]` is the MLP input.
    pub inputs: Vec<Array2<F>>,
    /// Output of the last (linear) layer.
    pub output: Array2<F>,
}

#[derive(Debug, Clone)]
pub struct ReadoutTrace<F> {
    pub f1: MlpTrace<F>,
    pub f2: MlpTrace<F>,
    /// Soft attention `σ(f1(h))`, `(B·N) × hidden`.
    pub attention: Array2<F>,
    /// `tanh(f2(h))`
    pub transform: Array2<F>,
    /// Masked `attention ⊙ transform`.
    pub node_out: Array2<F>,
    /// Row of the per-dimension maximum, `B × hidden`, indexing `node_out`.
    pub argmax: Array2<usize>,
    /// Graph embedding: mean plus max over real nodes, `B × hidden`.
    pub pooled: Array2<F>,
}

#[derive(Debug, Clone)]
pub struct ForwardTrace<F> {
    pub batch_size: usize,
    pub max_nodes: usize,
    /// `(B·N) × 1` node mask.
    pub mask: Array2<F>,
    /// Scaled inverted-dropout mask applied to `h⁰`.
    pub input_dropout: Option<Array2<F>>,
    /// `h⁰ … hᵗ`, each `(B·N) × hidden` and zero on padded rows.
    pub states: Vec<Array2<F>>,
    pub steps: Vec<StepTrace<F>>,
    pub readout: ReadoutTrace<F>,
    pub readout_dropout: Option<Array2<F>>,
    /// Classifier input (pooled embedding after dropout).
    pub classifier_input: Array2<F>,
    pub logits: Array2<F>,
    pub probabilities: Array2<F>,
    pub loss: F,
}

pub(crate) fn sigmoid<F: Real>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

/// `out[g] = A[g] · h[g]` for every graph block (or `A[g]ᵀ` when `transpose`).
pub(crate) fn block_matmul<F: Real>(adj: &Array3<F>, h: &Array2<F>, transpose: bool) -> Array2<F> {
    let (b, n, _) = adj.dim();
    let mut out = Array2::zeros(h.raw_dim());
    for g in 0..b {
        let a = adj.index_axis(Axis(0), g);
        let a = if transpose { a.reversed_axes() } else { a };
        general_mat_mul(
            F::one(),
            &a,
            &h.slice(s![g * n..(g + 1) * n, ..]),
            F::zero(),
            &mut out.slice_mut(s![g * n..(g + 1) * n, ..]),
        );
    }
    out
}

pub(crate) fn flat_mask<F: Real>(mask: &Array2<F>) -> Array2<F> {
    let (b, n) = mask.dim();
    Array2::from_shape_vec((b * n, 1), mask.iter().copied().collect()).expect("mask reshape")
}

fn check_square(name: &str, m: &Array2<impl Real>, h: usize) -> Result<()> {
    if m.dim() != (h, h) {
        return Err(Error::Shape(format!(
            "{name} is {:?}, expected {h}x{h}",
            m.dim()
        )));
    }
    Ok(())
}

fn check_gru_shapes<F: Real>(params: &ModelParams<F>) -> Result<usize> {
    let h = params.hidden();
    for (name, m) in [
        ("w_a", &params.w_a),
        ("w_z", &params.w_z),
        ("u_z", &params.u_z),
        ("w_r", &params.w_r),
        ("u_r", &params.u_r),
        ("w_h", &params.w_h),
        ("u_h", &params.u_h),
    ] {
        check_square(name, m, h)?;
    }
    for (name, b) in [
        ("b_z", &params.b_z),
        ("b_r", &params.b_r),
        ("b_h", &params.b_h),
    ] {
        if b.len() != h {
            return Err(Error::Shape(format!(
                "{name} has {} entries, expected {h}",
                b.len()
            )));
        }
    }
    Ok(h)
}

/// One gated interaction step over a padded batch.
///
/// `h` is `(B·N) × hidden` with zero padded rows, `adjacency` is `B × N × N`
/// and `mask` is `B × N`. Padded rows of the result are zero.
pub fn ggnn_step<F: Real>(
    h: &Array2<F>,
    adjacency: &Array3<F>,
    mask: &Array2<F>,
    params: &ModelParams<F>,
) -> Result<(Array2<F>, StepTrace<F>)> {
    let hidden = check_gru_shapes(params)?;
    let (b, n, n2) = adjacency.dim();
    if n != n2 || mask.dim() != (b, n) || h.dim() != (b * n, hidden) {
        return Err(Error::Shape(format!(
            "state {:?}, adjacency {:?}, mask {:?}",
            h.dim(),
            adjacency.dim(),
            mask.dim()
        )));
    }
    let mask_col = flat_mask(mask);
    Ok(step_unchecked(h, adjacency, &mask_col, params))
}

fn step_unchecked<F: Real>(
    h: &Array2<F>,
    adjacency: &Array3<F>,
    mask_col: &Array2<F>,
    params: &ModelParams<F>,
) -> (Array2<F>, StepTrace<F>) {
    let aggregated = block_matmul(adjacency, h, false);
    let message = aggregated.dot(&params.w_a);
    let update_gate =
        (message.dot(&params.w_z) + h.dot(&params.u_z) + &params.b_z).mapv_into(sigmoid);
    let reset_gate =
        (message.dot(&params.w_r) + h.dot(&params.u_r) + &params.b_r).mapv_into(sigmoid);
    let reset_state = &reset_gate * h;
    let candidate = (message.dot(&params.w_h) + reset_state.dot(&params.u_h) + &params.b_h)
        .mapv_into(|v| v.tanh());
    let mut next = Array2::zeros(h.raw_dim());
    Zip::from(&mut next)
        .and(&candidate)
        .and(&update_gate)
        .and(h)
        .for_each(|o, &c, &z, &hp| *o = c * z + hp * (F::one() - z));
    next *= mask_col;
    (
        next,
        StepTrace {
            aggregated,
            message,
            update_gate,
            reset_gate,
            reset_state,
            candidate,
        },
    )
}

pub(crate) fn flat_features<F: Real>(batch: &GraphBatch<F>) -> Array2<F> {
    let (b, n, d) = batch.features.dim();
    batch
        .features
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((b * n, d))
        .expect("contiguous features")
}

/// Initial node states `h⁰`: the (optionally projected) features, dropped
/// out when a scaled dropout mask is given, zero on padded rows.
pub(crate) fn initial_states<F: Real>(
    batch: &GraphBatch<F>,
    params: &ModelParams<F>,
    input_dropout: Option<&Array2<F>>,
) -> Array2<F> {
    let x = flat_features(batch);
    let mut h0 = match &params.input_proj {
        Some(p) => p.apply(&x),
        None => x,
    };
    if let Some(m) = input_dropout {
        h0 *= m;
    }
    h0 * &flat_mask(&batch.mask)
}

/// Node states `h⁰ … hᵗ` with the per-step intermediates.
pub type Interaction<F> = (Vec<Array2<F>>, Vec<StepTrace<F>>);

/// Runs `steps` gated interaction steps from the initial node states.
///
/// Returns `h⁰ … hᵗ` and the per-step intermediates; `steps = 0` yields `h⁰`.
pub fn interact<F: Real>(
    batch: &GraphBatch<F>,
    steps: usize,
    params: &ModelParams<F>,
    input_dropout: Option<&Array2<F>>,
) -> Result<Interaction<F>> {
    check_gru_shapes(params)?;
    if batch.feature_dim() != params.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: params.input_dim(),
            got: batch.feature_dim(),
        });
    }
    let mask_col = flat_mask(&batch.mask);
    let mut states = vec![initial_states(batch, params, input_dropout)];
    let mut traces = Vec::with_capacity(steps);
    for _ in 0..steps {
        let (next, trace) =
            step_unchecked(states.last().unwrap(), &batch.adjacency, &mask_col, params);
        states.push(next);
        traces.push(trace);
    }
    Ok((states, traces))
}

fn run_mlp<F: Real>(mlp: &Mlp<F>, x: &Array2<F>) -> MlpTrace<F> {
    let mut inputs = vec![x.clone()];
    let last = mlp.layers.len() - 1;
    for layer in &mlp.layers[..last] {
        let next = layer.apply(inputs.last().unwrap()).mapv_into(|v| v.tanh());
        inputs.push(next);
    }
    let output = mlp.layers[last].apply(inputs.last().unwrap());
    MlpTrace { inputs, output }
}

/// Attention readout: `h_v = σ(f1(h)) ⊙ tanh(f2(h))`, then mean plus
/// per-dimension max over the real nodes of each graph.
pub fn readout<F: Real>(
    h: &Array2<F>,
    mask: &Array2<F>,
    params: &ModelParams<F>,
) -> Result<ReadoutTrace<F>> {
    let (b, n) = mask.dim();
    let hidden = params.hidden();
    if h.dim() != (b * n, hidden) {
        return Err(Error::Shape(format!(
            "state {:?} vs mask {:?}",
            h.dim(),
            mask.dim()
        )));
    }
    let counts: Vec<usize> = mask
        .rows()
        .into_iter()
        .map(|r| r.iter().filter(|m| **m > F::zero()).count())
        .collect();
    if let Some(g) = counts.iter().position(|c| *c == 0) {
        return Err(Error::EmptyGraph(g));
    }
    let f1 = run_mlp(&params.f1, h);
    let f2 = run_mlp(&params.f2, h);
    let attention = f1.output.mapv(sigmoid);
    let transform = f2.output.mapv(|v| v.tanh());
    let node_out = &attention * &transform * &flat_mask(mask);

    let mut pooled = Array2::zeros((b, hidden));
    let mut argmax = Array2::zeros((b, hidden));
    for g in 0..b {
        let inv = F::one() / F::from_usize(counts[g]).unwrap();
        for k in 0..hidden {
            let mut sum = F::zero();
            let mut best = F::neg_infinity();
            let mut best_row = 0;
            for v in 0..n {
                if mask[[g, v]] <= F::zero() {
                    continue;
                }
                let x = node_out[[g * n + v, k]];
                sum += x;
                if x > best {
                    best = x;
                    best_row = g * n + v;
                }
            }
            pooled[[g, k]] = sum * inv + best;
            argmax[[g, k]] = best_row;
        }
    }
    Ok(ReadoutTrace {
        f1,
        f2,
        attention,
        transform,
        node_out,
        argmax,
        pooled,
    })
}

pub(crate) fn logits<F: Real>(h_g: &Array2<F>, classifier: &Affine<F>) -> Array2<F> {
    classifier.apply(h_g)
}

/// Row-wise `log Σ exp`, shifted by the row maximum.
pub(crate) fn log_sum_exp<F: Real>(logits: &Array2<F>) -> Vec<F> {
    logits
        .rows()
        .into_iter()
        .map(|row| {
            let m = row.iter().copied().fold(F::neg_infinity(), F::max);
            m + row
                .iter()
                .map(|&v| (v - m).exp())
                .fold(F::zero(), |a, b| a + b)
                .ln()
        })
        .collect()
}

pub(crate) fn softmax<F: Real>(logits: &Array2<F>) -> Array2<F> {
    let lse = log_sum_exp(logits);
    let mut out = logits.clone();
    for (mut row, l) in out.rows_mut().into_iter().zip(lse) {
        row.mapv_inplace(|v| (v - l).exp());
    }
    out
}

/// Class probabilities `softmax(h_G · W + b)`.
pub fn predict<F: Real>(h_g: &Array2<F>, params: &ModelParams<F>) -> Array2<F> {
    softmax(&logits(h_g, &params.classifier))
}

/// Mean cross-entropy computed from logits through log-sum-exp.
pub fn loss_from_logits<F: Real>(logits: &Array2<F>, labels: &[usize]) -> F {
    let lse = log_sum_exp(logits);
    let total = labels
        .iter()
        .enumerate()
        .map(|(i, &y)| lse[i] - logits[[i, y]])
        .fold(F::zero(), |a, b| a + b);
    total / F::from_usize(labels.len().max(1)).unwrap()
}

/// Mean `-ln p[label]` over the batch.
pub fn loss<F: Real>(probabilities: &Array2<F>, labels: &[usize]) -> F {
    let total = labels
        .iter()
        .enumerate()
        .map(|(i, &y)| -probabilities[[i, y]].ln())
        .fold(F::zero(), |a, b| a + b);
    total / F::from_usize(labels.len().max(1)).unwrap()
}

fn dropout_mask<F: Real, R: Rng>(shape: (usize, usize), rate: f64, rng: &mut R) -> Array2<F> {
    let keep = 1.0 - rate;
    let scale = F::of_f64(1.0 / keep);
    Array2::from_shape_simple_fn(shape, || {
        if rng.gen::<f64>() < keep {
            scale
        } else {
            F::zero()
        }
    })
}

/// Full forward pass, keeping every intermediate needed for backprop.
///
/// In [`Mode::Train`] inverted dropout is applied to `h⁰` and to the pooled
/// graph embedding; [`Mode::Eval`] never touches `rng`.
pub fn forward<F: Real, R: Rng>(
    batch: &GraphBatch<F>,
    params: &ModelParams<F>,
    hyper: &HyperParams,
    mode: Mode,
    rng: &mut R,
) -> Result<ForwardTrace<F>> {
    let (b, n, _) = batch.features.dim();
    let hidden = params.hidden();
    let drop = mode == Mode::Train && hyper.dropout > 0.0;

    let input_dropout = drop.then(|| dropout_mask((b * n, hidden), hyper.dropout, rng));
    let (states, steps) = interact(batch, hyper.steps, params, input_dropout.as_ref())?;
    let readout = readout(states.last().unwrap(), &batch.mask, params)?;
    let readout_dropout = drop.then(|| dropout_mask((b, hidden), hyper.dropout, rng));
    let classifier_input = match &readout_dropout {
        Some(m) => &readout.pooled * m,
        None => readout.pooled.clone(),
    };
    if params.classifier.weight.nrows() != hidden {
        return Err(Error::Shape("classifier input size".into()));
    }
    if let Some(&y) = batch.labels.iter().find(|&&y| y >= params.num_classes()) {
        return Err(Error::Shape(format!(
            "label {y} out of range for {} classes",
            params.num_classes()
        )));
    }
    let logits = logits(&classifier_input, &params.classifier);
    let probabilities = softmax(&logits);
    let loss = loss_from_logits(&logits, &batch.labels);
    Ok(ForwardTrace {
        batch_size: b,
        max_nodes: n,
        mask: flat_mask(&batch.mask),
        input_dropout,
        states,
        steps,
        readout,
        readout_dropout,
        classifier_input,
        logits,
        probabilities,
        loss,
    })
}

/// Deterministic evaluation-mode forward pass.
pub fn forward_eval<F: Real>(
    batch: &GraphBatch<F>,
    params: &ModelParams<F>,
    hyper: &HyperParams,
) -> Result<ForwardTrace<F>> {
    forward(
        batch,
        params,
        hyper,
        Mode::Eval,
        &mut rand::rngs::mock::StepRng::new(0, 0),
    )
}
