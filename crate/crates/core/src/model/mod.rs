//! The gated graph network, its attention readout and the softmax classifier.
//!
//! Node states are kept row-major: a batch of `B` graphs padded to `N` nodes
//! is a `(B·N) × hidden` matrix, so every dense layer acts on the right
//! (`x · W`). This is the transpose of the column-vector notation usually
//! used for these equations and computes the same values.

mod checkpoint;
mod forward;
mod params;

use std::fmt::{Debug, Display};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::Normalization;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, TensorEntry};
pub use forward::{
    forward, forward_eval, ggnn_step, interact, loss, loss_from_logits, predict, readout,
    ForwardTrace, MlpTrace, Mode, ReadoutTrace, StepTrace,
};
pub use params::{Affine, Mlp, ModelParams};

pub(crate) mod forward_internals {
    pub(crate) use super::forward::{block_matmul, flat_features, softmax};
}

/// Floating-point element type used by the network.
pub trait Real:
    num_traits::Float
    + num_traits::NumAssign
    + num_traits::FromPrimitive
    + ndarray::LinalgScalar
    + ndarray::ScalarOperand
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    fn of_f32(x: f32) -> Self;
    fn of_f64(x: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Real for f32 {
    fn of_f32(x: f32) -> Self {
        x
    }
    fn of_f64(x: f64) -> Self {
        x as f32
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn of_f32(x: f32) -> Self {
        x as f64
    }
    fn of_f64(x: f64) -> Self {
        x
    }
    fn as_f64(self) -> f64 {
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperParams {
    /// Number of gated interaction steps.
    pub steps: usize,
    pub input_dim: usize,
    pub hidden: usize,
    /// When false the input features are used directly as `h⁰`, which
    /// requires `input_dim == hidden`.
    pub use_projection: bool,
    /// Affine layers in each readout MLP (tanh between layers).
    pub mlp_depth: usize,
    pub window: usize,
    pub global_window: usize,
    pub normalization: Normalization,
    pub self_loops: bool,
    pub dropout: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub clip_norm: Option<f64>,
    /// Fraction of the training pool kept for training; the rest validates.
    pub train_ratio: f64,
    pub seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            steps: 2,
            input_dim: 300,
            hidden: 96,
            use_projection: true,
            mlp_depth: 1,
            window: 3,
            global_window: 20,
            normalization: Normalization::Row,
            self_loops: true,
            dropout: 0.5,
            learning_rate: 0.01,
            batch_size: 64,
            max_epochs: 200,
            patience: 10,
            clip_norm: None,
            train_ratio: 0.9,
            seed: 0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.hidden == 0 || self.input_dim == 0 {
            return bad("dimensions must be positive".into());
        }
        if !self.use_projection && self.input_dim != self.hidden {
            return bad(format!(
                "projection disabled but input_dim {} != hidden {}",
                self.input_dim, self.hidden
            ));
        }
        if self.mlp_depth == 0 {
            return bad("mlp_depth must be at least 1".into());
        }
        if self.window < 2 || self.global_window < 2 {
            return bad("windows must be at least 2".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if self.learning_rate.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return bad("learning_rate must be positive".into());
        }
        Ok(())
    }
}
