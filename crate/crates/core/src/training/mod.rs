//! Gradients, optimization, the early-stopped training loop and evaluation.

mod adam;
mod backward;
mod trainer;

pub use adam::{adam_step, AdamState};
pub use backward::{backward, GradientSet};
pub use trainer::{
    argmax_rows, evaluate, predict_graphs, prepare_graphs, train, train_on_graphs,
    vote_multichannel, write_metrics_csv, Channel, EpochRecord, GraphSets, ImproveHook,
    TrainReport, Vote,
};
