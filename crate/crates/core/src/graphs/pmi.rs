use std::collections::{BTreeMap, HashMap, HashSet};

use ndarray::Array2;

use super::{node_features, node_index, DocGraph};
use crate::corpus::{Corpus, Document, EmbeddingTable};
use crate::error::{Error, Result};

/// Raw sliding-window counts over the training documents.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WindowCounts {
    pub total_windows: u64,
    pub word: HashMap<String, u64>,
    /// Keyed by lexicographically ordered word pair.
    pub pair: HashMap<(String, String), u64>,
}

/// Corpus-level word graph weighted by positive pointwise mutual information.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalWordGraph {
    weights: HashMap<(String, String), f64>,
    pub window: usize,
    pub fingerprint: u64,
}

fn key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl WindowCounts {
    pub fn count<'a>(docs: impl IntoIterator<Item = &'a Document>, window: usize) -> Self {
        let mut counts = WindowCounts::default();
        for doc in docs {
            let tokens = &doc.tokens;
            let spans: Vec<&[String]> = if tokens.len() <= window {
                vec![tokens.as_slice()]
            } else {
                tokens.windows(window).collect()
            };
            for span in spans {
                counts.total_windows += 1;
                let set: Vec<&str> = span
                    .iter()
                    .map(String::as_str)
                    .collect::<HashSet<_>>()
                    .into_iter()
                    .collect();
                for (i, a) in set.iter().enumerate() {
                    *counts.word.entry(a.to_string()).or_default() += 1;
                    for b in &set[i + 1..] {
                        *counts.pair.entry(key(a, b)).or_default() += 1;
                    }
                }
            }
        }
        counts
    }

    pub fn pmi(&self, a: &str, b: &str) -> Option<f64> {
        let joint = *self.pair.get(&key(a, b))? as f64;
        let wa = *self.word.get(a)? as f64;
        let wb = *self.word.get(b)? as f64;
        Some((joint * self.total_windows as f64 / (wa * wb)).ln())
    }
}

fn fingerprint(docs: &[&Document], window: usize) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ window as u64;
    let mut feed = |bytes: &[u8]| {
        for b in bytes {
            h ^= *b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    for doc in docs {
        for tok in &doc.tokens {
            feed(tok.as_bytes());
            feed(b" ");
        }
        feed(b"\n");
    }
    h
}

/// Builds the PMI word graph from the corpus' training pool (train + val).
pub fn build_global_pmi_graph(corpus: &Corpus, window: usize) -> Result<GlobalWordGraph> {
    if window < 2 {
        return Err(Error::BadWindow(window));
    }
    let docs: Vec<&Document> = corpus
        .documents
        .iter()
        .filter(|d| d.split.is_training())
        .collect();
    if docs.is_empty() {
        return Err(Error::EmptySet("training"));
    }
    let counts = WindowCounts::count(docs.iter().copied(), window);
    let mut weights = HashMap::new();
    for (a, b) in counts.pair.keys() {
        let pmi = counts.pmi(a, b).expect("pair words are counted");
        if pmi > 0.0 {
            weights.insert((a.clone(), b.clone()), pmi);
        }
    }
    Ok(GlobalWordGraph {
        weights,
        window,
        fingerprint: fingerprint(&docs, window),
    })
}

impl GlobalWordGraph {
    pub fn weight(&self, a: &str, b: &str) -> Option<f64> {
        self.weights.get(&key(a, b)).copied()
    }

    pub fn num_edges(&self) -> usize {
        self.weights.len()
    }

    /// Edges in a stable order, for serialization and inspection.
    pub fn sorted_edges(&self) -> BTreeMap<(String, String), f64> {
        self.weights.iter().map(|(k, v)| (k.clone(), *v)).collect()
    }
}

/// Per-document subgraph of the global PMI graph over the document's words.
///
/// Node order matches the local co-occurrence graph of the same document.
pub fn extract_subgraph(
    doc: &Document,
    global: &GlobalWordGraph,
    embeddings: &EmbeddingTable,
) -> DocGraph {
    let (nodes, _) = node_index(&doc.tokens);
    let n = nodes.len();
    let mut adjacency = Array2::<f32>::zeros((n, n));
    for i in 0..n {
        for j in i + 1..n {
            if let Some(w) = global.weight(&nodes[i], &nodes[j]) {
                adjacency[[i, j]] = w as f32;
                adjacency[[j, i]] = w as f32;
            }
        }
    }
    let features = node_features(&nodes, embeddings);
    DocGraph {
        id: doc.id.clone(),
        node_words: nodes,
        adjacency,
        features,
        label: doc.label,
    }
}
