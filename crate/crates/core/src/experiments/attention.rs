use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{create_dir, write_file, ExperimentConfig};
use crate::corpus::{split_train_val, Corpus, Document, EmbeddingTable, Split};
use crate::error::{Error, Result};
use crate::graphs::{batch_graphs, document_graph, normalize_adjacency, DocGraph};
use crate::model::{forward_eval, HyperParams, ModelParams};
use crate::training::{argmax_rows, prepare_graphs, train_on_graphs, Channel};

/// How the per-dimension attention gate is reduced to one scalar per word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttentionReduce {
    #[default]
    Mean,
    Max,
}

/// Per-node attention scalars (in `(0, 1)`) and the predicted class.
pub fn attention_weights(
    params: &ModelParams<f32>,
    graph: &DocGraph,
    hyper: &HyperParams,
    reduce: AttentionReduce,
) -> Result<(Vec<f64>, usize)> {
    let batch = batch_graphs::<f32>(&[graph])?;
    let trace = forward_eval(&batch, params, hyper)?;
    let n = graph.num_nodes();
    let weights = trace
        .readout
        .attention
        .rows()
        .into_iter()
        .take(n)
        .map(|row| match reduce {
            AttentionReduce::Mean => row.iter().map(|v| *v as f64).sum::<f64>() / row.len() as f64,
            AttentionReduce::Max => row.iter().fold(f64::NEG_INFINITY, |a, v| a.max(*v as f64)),
        })
        .collect();
    Ok((weights, argmax_rows(&trace.logits)[0]))
}

/// Min-max scaling to `[0, 1]`; all-equal weights map to 1.
pub fn normalize_weights(weights: &[f64]) -> Vec<f64> {
    let min = weights.iter().copied().fold(f64::INFINITY, f64::min);
    let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max - min <= 0.0 {
        return vec![1.0; weights.len()];
    }
    weights.iter().map(|w| (w - min) / (max - min)).collect()
}

fn escape_html(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes `attention.csv` (one row per token) and `attention.html`.
///
/// Each document must come with the graph built from it.
pub fn export_attention(
    params: &ModelParams<f32>,
    items: &[(&Document, &DocGraph)],
    hyper: &HyperParams,
    classes: &[String],
    reduce: AttentionReduce,
    out_dir: &Path,
) -> Result<()> {
    create_dir(out_dir)?;
    struct Row {
        id: String,
        true_label: usize,
        predicted: usize,
        tokens: Vec<(String, f64, f64)>,
    }
    let mut rows = Vec::with_capacity(items.len());
    for (doc, graph) in items {
        let (weights, predicted) = attention_weights(params, graph, hyper, reduce)?;
        let normalized = normalize_weights(&weights);
        let index: HashMap<&str, usize> = graph
            .node_words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.as_str(), i))
            .collect();
        let tokens = doc
            .tokens
            .iter()
            .map(|t| {
                let i = *index.get(t.as_str()).ok_or_else(|| {
                    Error::Shape(format!("token {t:?} not in graph of {}", doc.id))
                })?;
                Ok((t.clone(), weights[i], normalized[i]))
            })
            .collect::<Result<_>>()?;
        rows.push(Row {
            id: doc.id.clone(),
            true_label: doc.label,
            predicted,
            tokens,
        });
    }

    write_file(&out_dir.join("attention.csv"), |w| {
        writeln!(w, "doc_id,word,weight,normalized,predicted,true")?;
        for r in &rows {
            for (t, weight, norm) in &r.tokens {
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    csv_field(&r.id),
                    csv_field(t),
                    weight,
                    norm,
                    csv_field(&classes[r.predicted]),
                    csv_field(&classes[r.true_label])
                )?;
            }
        }
        Ok(())
    })?;

    write_file(&out_dir.join("attention.html"), |w| {
        writeln!(w, "<!DOCTYPE html>")?;
        writeln!(
            w,
            "<html><head><meta charset=\"utf-8\"><title>attention</title>"
        )?;
        writeln!(
            w,
            "<style>body{{font-family:sans-serif;max-width:60em}} .doc{{margin:1em 0}} .w{{padding:0 2px}}</style>"
        )?;
        writeln!(w, "</head><body>")?;
        for r in &rows {
            writeln!(
                w,
                "<div class=\"doc\"><p><b>{}</b> predicted: {} true: {}</p><p>",
                escape_html(&r.id),
                escape_html(&classes[r.predicted]),
                escape_html(&classes[r.true_label])
            )?;
            for (t, _, norm) in &r.tokens {
                write!(
                    w,
                    "<span class=\"w\" style=\"background:rgba(255,140,0,{norm:.3})\">{}</span> ",
                    escape_html(t)
                )?;
            }
            writeln!(w, "</p></div>")?;
        }
        writeln!(w, "</body></html>")
    })
}

/// Trains (or reuses) a local-channel model and exports attention for the
/// first test documents.
pub fn run_attention(
    corpus: &Corpus,
    embeddings: &EmbeddingTable,
    config: &ExperimentConfig,
    trained: Option<(&ModelParams<f32>, &HyperParams)>,
    out_dir: &Path,
) -> Result<()> {
    config.validate()?;
    let owned;
    let (params, hyper) = match trained {
        Some(t) => t,
        None => {
            let hyper = HyperParams {
                seed: config.seeds[0],
                ..config.hyper.clone()
            };
            let split = split_train_val(corpus, hyper.train_ratio, hyper.seed)?;
            let sets = prepare_graphs(&split, embeddings, &hyper, Channel::Local)?;
            let (params, _) = train_on_graphs(&sets, corpus.num_classes(), &hyper, None)?;
            owned = (params, hyper);
            (&owned.0, &owned.1)
        }
    };
    let limit = config.attention_docs.unwrap_or(usize::MAX);
    let docs: Vec<&Document> = corpus.split(Split::Test).take(limit).collect();
    let graphs: Vec<DocGraph> = docs
        .iter()
        .map(|d| {
            let g = document_graph(d, hyper.window, embeddings)?;
            Ok(normalize_adjacency(
                &g,
                hyper.normalization,
                hyper.self_loops,
            ))
        })
        .collect::<Result<_>>()?;
    let items: Vec<(&Document, &DocGraph)> = docs.iter().copied().zip(&graphs).collect();
    export_attention(
        params,
        &items,
        hyper,
        &corpus.classes,
        config.attention_reduce,
        out_dir,
    )
}
