//! Inductive text classification over per-document word graphs.
//!
//! Each document becomes its own sliding-window co-occurrence graph. Word
//! nodes exchange information through gated graph steps, and a soft
//! attention readout pools them into a document vector that a softmax layer
//! classifies. Because nothing is shared between documents except the
//! learned weights, unseen documents and unseen words are handled at test
//! time without retraining.
//!
//! Modules, bottom-up:
//! - [`corpus`]: datasets, tokenization, splits, pretrained embeddings, statistics
//! - [`graphs`]: local co-occurrence graphs, the corpus PMI graph, padded batches
//! - [`model`]: forward pass and checkpoints
//! - [`training`]: backprop, Adam, the training loop, evaluation, channel voting
//! - [`experiments`]: reproducible runs driven by the `texting` binary

pub mod corpus;
pub mod error;
pub mod experiments;
pub mod graphs;
pub mod model;
pub mod training;

pub use error::{Error, Result};
