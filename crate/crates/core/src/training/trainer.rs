use std::io::Write;
use std::time::Instant;

use ndarray::{concatenate, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{adam_step, backward, AdamState};
use crate::corpus::{Corpus, EmbeddingTable, Split};
use crate::error::{Error, Result};
use crate::graphs::{
    batch_graphs, build_global_pmi_graph, document_graph, extract_subgraph, normalize_adjacency,
    DocGraph,
};
use crate::model::forward_internals::softmax;
use crate::model::{forward, forward_eval, loss_from_logits, HyperParams, Mode, ModelParams, Real};

/// Which edge set a model is trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    /// Sliding-window co-occurrence inside each document.
    Local,
    /// Per-document subgraph of the corpus PMI graph.
    Global,
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Channel::Local => "local",
            Channel::Global => "global",
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct GraphSets {
    pub train: Vec<DocGraph>,
    pub val: Vec<DocGraph>,
    pub test: Vec<DocGraph>,
}

/// Builds and normalizes the graphs of every document for one channel.
pub fn prepare_graphs(
    corpus: &Corpus,
    embeddings: &EmbeddingTable,
    hyper: &HyperParams,
    channel: Channel,
) -> Result<GraphSets> {
    let global = match channel {
        Channel::Global => Some(build_global_pmi_graph(corpus, hyper.global_window)?),
        Channel::Local => None,
    };
    let graphs: Vec<(Split, DocGraph)> = corpus
        .documents
        .par_iter()
        .map(|doc| {
            let g = match &global {
                Some(gl) => extract_subgraph(doc, gl, embeddings),
                None => document_graph(doc, hyper.window, embeddings)?,
            };
            Ok((
                doc.split,
                normalize_adjacency(&g, hyper.normalization, hyper.self_loops),
            ))
        })
        .collect::<Result<_>>()?;
    let mut sets = GraphSets::default();
    for (split, g) in graphs {
        match split {
            Split::Train => sets.train.push(g),
            Split::Val => sets.val.push(g),
            Split::Test => sets.test.push(g),
        }
    }
    Ok(sets)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_acc: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub seed: u64,
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub best_val_acc: f64,
    /// Accuracy of the kept parameters on the test graphs, if any.
    pub test_acc: Option<f64>,
    /// Kept out of the serialized report so reruns stay byte-identical.
    #[serde(skip)]
    pub wall_clock_secs: f64,
}

/// Logits for every graph, computed in eval mode in fixed-size chunks.
///
/// Chunks run in parallel; rows come back in input order.
pub fn predict_graphs<F: Real>(
    params: &ModelParams<F>,
    graphs: &[DocGraph],
    hyper: &HyperParams,
) -> Result<Array2<F>> {
    if graphs.is_empty() {
        return Err(Error::EmptySet("evaluation"));
    }
    let chunks: Vec<Array2<F>> = graphs
        .par_chunks(hyper.batch_size.max(1))
        .map(|chunk| {
            let refs: Vec<&DocGraph> = chunk.iter().collect();
            let batch = batch_graphs::<F>(&refs)?;
            Ok(forward_eval(&batch, params, hyper)?.logits)
        })
        .collect::<Result<_>>()?;
    let views: Vec<_> = chunks.iter().map(|c| c.view()).collect();
    Ok(concatenate(Axis(0), &views).expect("same class count"))
}

/// Row-wise argmax, ties going to the lowest class index.
pub fn argmax_rows<F: Real>(m: &Array2<F>) -> Vec<usize> {
    m.rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (i, v) in row.iter().enumerate() {
                if *v > row[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}

fn accuracy(pred: &[usize], graphs: &[DocGraph]) -> f64 {
    let hits = pred
        .iter()
        .zip(graphs)
        .filter(|(p, g)| **p == g.label)
        .count();
    hits as f64 / graphs.len() as f64
}

/// Fraction of graphs whose most probable class matches the label.
pub fn evaluate<F: Real>(
    params: &ModelParams<F>,
    graphs: &[DocGraph],
    hyper: &HyperParams,
) -> Result<f64> {
    let probs = softmax(&predict_graphs(params, graphs, hyper)?);
    Ok(accuracy(&argmax_rows(&probs), graphs))
}

/// Multichannel combination rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Vote {
    /// Argmax of the averaged probabilities.
    #[default]
    Average,
    /// Each channel votes its argmax; disagreements go to the local channel.
    Hard,
}

/// Combines two channels' probabilities with equal weight.
pub fn vote_multichannel<F: Real>(
    p_local: &Array2<F>,
    p_global: &Array2<F>,
    vote: Vote,
) -> Result<Vec<usize>> {
    if p_local.dim() != p_global.dim() {
        return Err(Error::Shape(format!(
            "local {:?} vs global {:?}",
            p_local.dim(),
            p_global.dim()
        )));
    }
    Ok(match vote {
        Vote::Average => {
            let half = F::of_f64(0.5);
            argmax_rows(&((p_local + p_global) * half))
        }
        Vote::Hard => argmax_rows(p_local),
    })
}

/// Callback run after each improving epoch.
pub type ImproveHook<'a> = &'a mut dyn FnMut(&EpochRecord, &ModelParams<f32>) -> Result<()>;

/// Early-stopped training on prepared graphs.
///
/// Each epoch visits the training graphs in a seeded permutation, then
/// scores the validation graphs. An epoch improves on the best so far when
/// its validation accuracy is higher, or equal with a lower validation loss.
/// Training stops once `patience` consecutive epochs fail to improve, and
/// the returned parameters are those of the best epoch. `on_improve` runs
/// after every improving epoch (for checkpointing).
pub fn train_on_graphs(
    sets: &GraphSets,
    num_classes: usize,
    hyper: &HyperParams,
    mut on_improve: Option<ImproveHook<'_>>,
) -> Result<(ModelParams<f32>, TrainReport)> {
    hyper.validate()?;
    if sets.train.is_empty() {
        return Err(Error::EmptySet("training"));
    }
    if sets.val.is_empty() {
        return Err(Error::EmptySet("validation"));
    }
    let started = Instant::now();
    let mut params: ModelParams<f32> = ModelParams::init(hyper, num_classes);
    let mut adam = AdamState::new(&params);
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed.wrapping_add(0x07e5_71a9));
    let mut order: Vec<usize> = (0..sets.train.len()).collect();

    let mut best = params.clone();
    let mut best_epoch = 0;
    let mut best_acc = f64::NEG_INFINITY;
    let mut best_loss = f64::INFINITY;
    let mut stale = 0;
    let mut epochs = Vec::new();

    for epoch in 1..=hyper.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(hyper.batch_size) {
            let refs: Vec<&DocGraph> = chunk.iter().map(|&i| &sets.train[i]).collect();
            let batch = batch_graphs::<f32>(&refs)?;
            let trace = forward(&batch, &params, hyper, Mode::Train, &mut rng)?;
            let mut grads = backward(&trace, &batch, &params)?;
            if let Some(max) = hyper.clip_norm {
                grads.clip_global_norm(max as f32);
            }
            adam_step(&mut params, &grads, &mut adam, hyper.learning_rate)?;
            loss_sum += trace.loss as f64 * chunk.len() as f64;
        }

        let val_logits = predict_graphs(&params, &sets.val, hyper)?;
        let val_labels: Vec<usize> = sets.val.iter().map(|g| g.label).collect();
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / sets.train.len() as f64,
            val_acc: accuracy(&argmax_rows(&val_logits), &sets.val),
            val_loss: loss_from_logits(&val_logits, &val_labels) as f64,
        };
        let improved = record.val_acc > best_acc
            || (record.val_acc == best_acc && record.val_loss < best_loss);
        if improved {
            best = params.clone();
            best_epoch = epoch;
            best_acc = record.val_acc;
            best_loss = record.val_loss;
            stale = 0;
            if let Some(cb) = on_improve.as_mut() {
                cb(&record, &best)?;
            }
        } else {
            stale += 1;
        }
        epochs.push(record);
        if stale > hyper.patience {
            break;
        }
    }

    let test_acc = if sets.test.is_empty() {
        None
    } else {
        Some(evaluate(&best, &sets.test, hyper)?)
    };
    Ok((
        best,
        TrainReport {
            seed: hyper.seed,
            epochs,
            best_epoch,
            best_val_acc: best_acc.max(0.0),
            test_acc,
            wall_clock_secs: started.elapsed().as_secs_f64(),
        },
    ))
}

/// Builds the channel's graphs from a split corpus and trains on them.
pub fn train(
    corpus: &Corpus,
    embeddings: &EmbeddingTable,
    hyper: &HyperParams,
    channel: Channel,
) -> Result<(ModelParams<f32>, TrainReport)> {
    let sets = prepare_graphs(corpus, embeddings, hyper, channel)?;
    train_on_graphs(&sets, corpus.num_classes(), hyper, None)
}

/// `epoch,train_loss,val_acc` rows.
pub fn write_metrics_csv<W: Write>(mut out: W, report: &TrainReport) -> std::io::Result<()> {
    writeln!(out, "epoch,train_loss,val_acc")?;
    for e in &report.epochs {
        writeln!(out, "{},{},{}", e.epoch, e.train_loss, e.val_acc)?;
    }
    Ok(())
}
