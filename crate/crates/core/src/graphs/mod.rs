//! Per-document word co-occurrence graphs, the corpus-level PMI word graph
//! and padded mini-batches.

mod batch;
mod dump;
mod pmi;

use std::collections::HashMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, EmbeddingTable};
use crate::error::{Error, Result};

pub use batch::{batch_graphs, GraphBatch};
pub use dump::{read_graph_dump, write_graph_dump, GraphRecord};
pub use pmi::{build_global_pmi_graph, extract_subgraph, GlobalWordGraph, WindowCounts};

/// How the adjacency matrix is rescaled before message passing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    None,
    #[default]
    Row,
    Symmetric,
}

impl std::str::FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Normalization::None),
            "row" => Ok(Normalization::Row),
            "symmetric" | "sym" => Ok(Normalization::Symmetric),
            _ => Err(Error::Config(format!("unknown normalization {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocGraph {
    pub id: String,
    pub node_words: Vec<String>,
    pub adjacency: Array2<f32>,
    pub features: Array2<f32>,
    pub label: usize,
}

/// Distinct tokens in first-occurrence order, plus each token's node index.
pub(crate) fn node_index<S: AsRef<str>>(tokens: &[S]) -> (Vec<String>, Vec<usize>) {
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut nodes = Vec::new();
    let positions = tokens
        .iter()
        .map(|t| {
            let t = t.as_ref();
            *index.entry(t).or_insert_with(|| {
                nodes.push(t.to_string());
                nodes.len() - 1
            })
        })
        .collect();
    (nodes, positions)
}

pub(crate) fn node_features(nodes: &[String], embeddings: &EmbeddingTable) -> Array2<f32> {
    let d = embeddings.dimension();
    let mut features = Array2::zeros((nodes.len(), d));
    for (mut row, word) in features.rows_mut().into_iter().zip(nodes) {
        row.assign(&ndarray::ArrayView1::from(&embeddings.lookup(word)));
    }
    features
}

/// Sliding-window co-occurrence graph over a token sequence.
///
/// Every pair of distinct words sharing a window of `window` consecutive
/// positions is joined by an undirected edge of weight 1. A sequence
/// shorter than the window is treated as one window.
pub fn build_graph<S: AsRef<str>>(
    tokens: &[S],
    window: usize,
    embeddings: &EmbeddingTable,
) -> Result<DocGraph> {
    if window < 2 {
        return Err(Error::BadWindow(window));
    }
    if tokens.is_empty() {
        return Err(Error::EmptyGraph(0));
    }
    let (nodes, positions) = node_index(tokens);
    let n = nodes.len();
    let mut adjacency = Array2::<f32>::zeros((n, n));
    // Positions i and j share some window iff |i - j| < window, which also
    // covers the single truncated window of a short sequence.
    for (i, &u) in positions.iter().enumerate() {
        for &v in positions.iter().skip(i + 1).take(window - 1) {
            if u != v {
                adjacency[[u, v]] = 1.0;
                adjacency[[v, u]] = 1.0;
            }
        }
    }
    let features = node_features(&nodes, embeddings);
    Ok(DocGraph {
        id: String::new(),
        node_words: nodes,
        adjacency,
        features,
        label: 0,
    })
}

/// Local co-occurrence graph for a corpus document, carrying its id and label.
pub fn document_graph(
    doc: &Document,
    window: usize,
    embeddings: &EmbeddingTable,
) -> Result<DocGraph> {
    let mut g = build_graph(&doc.tokens, window, embeddings)?;
    g.id = doc.id.clone();
    g.label = doc.label;
    Ok(g)
}

impl DocGraph {
    pub fn num_nodes(&self) -> usize {
        self.node_words.len()
    }

    /// Undirected edges `(i, j, w)` with `i < j`, skipping the diagonal.
    pub fn edges(&self) -> Vec<(usize, usize, f32)> {
        let n = self.num_nodes();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let w = self.adjacency[[i, j]];
                if w != 0.0 {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    /// `2|E| / (|V| (|V| - 1))`, defined as 1 for a single node.
    pub fn density(&self) -> f64 {
        let n = self.num_nodes();
        if n <= 1 {
            return 1.0;
        }
        2.0 * self.edges().len() as f64 / (n * (n - 1)) as f64
    }
}

/// Rescales the adjacency, optionally adding self-loops first.
///
/// Rows with zero degree stay all-zero.
pub fn normalize_adjacency(g: &DocGraph, mode: Normalization, self_loops: bool) -> DocGraph {
    let mut out = g.clone();
    if mode == Normalization::None {
        return out;
    }
    let n = g.num_nodes();
    let mut a = g.adjacency.clone();
    if self_loops {
        for i in 0..n {
            a[[i, i]] += 1.0;
        }
    }
    let degree: Vec<f32> = a.rows().into_iter().map(|r| r.sum()).collect();
    let inv = |d: f32, f: fn(f32) -> f32| if d > 0.0 { f(d) } else { 0.0 };
    for i in 0..n {
        for j in 0..n {
            a[[i, j]] *= match mode {
                Normalization::Row => inv(degree[i], |d| 1.0 / d),
                Normalization::Symmetric => {
                    inv(degree[i], |d| 1.0 / d.sqrt()) * inv(degree[j], |d| 1.0 / d.sqrt())
                }
                Normalization::None => unreachable!(),
            };
        }
    }
    out.adjacency = a;
    out
}
