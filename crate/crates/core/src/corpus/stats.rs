use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{Corpus, Split};

/// Per-dataset statistics in the layout of the benchmark statistics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub dataset: String,
    pub docs: usize,
    /// Training pool (train + val).
    pub training: usize,
    pub test: usize,
    pub classes: usize,
    pub max_vocab: usize,
    pub min_vocab: usize,
    pub avg_vocab: f64,
    /// Percentage of test word types that never occur in the training pool.
    pub prop_new_words: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsMismatch {
    pub field: &'static str,
    pub expected: String,
    pub actual: String,
}

pub fn corpus_stats(corpus: &Corpus) -> StatsReport {
    let per_doc: Vec<usize> = corpus
        .documents
        .iter()
        .map(|d| d.unique_words().len())
        .collect();
    let vocab = corpus.vocabulary();
    let test_types: HashSet<&str> = corpus
        .split(Split::Test)
        .flat_map(|d| d.tokens.iter().map(String::as_str))
        .collect();
    let new_types = test_types.iter().filter(|w| !vocab.contains(w)).count();

    StatsReport {
        dataset: corpus.name.clone(),
        docs: corpus.documents.len(),
        training: corpus
            .documents
            .iter()
            .filter(|d| d.split.is_training())
            .count(),
        test: corpus.count(Split::Test),
        classes: corpus.num_classes(),
        max_vocab: per_doc.iter().copied().max().unwrap_or(0),
        min_vocab: per_doc.iter().copied().min().unwrap_or(0),
        avg_vocab: if per_doc.is_empty() {
            0.0
        } else {
            per_doc.iter().sum::<usize>() as f64 / per_doc.len() as f64
        },
        prop_new_words: if test_types.is_empty() {
            0.0
        } else {
            100.0 * new_types as f64 / test_types.len() as f64
        },
    }
}

/// Published reference statistics for the four benchmark datasets.
pub fn reference_stats(dataset: &str) -> Option<StatsReport> {
    let row = |name: &str, docs, training, test, classes, max, min, avg, nw| StatsReport {
        dataset: name.to_string(),
        docs,
        training,
        test,
        classes,
        max_vocab: max,
        min_vocab: min,
        avg_vocab: avg,
        prop_new_words: nw,
    };
    match dataset.to_ascii_lowercase().as_str() {
        "mr" => Some(row("mr", 10_662, 7_108, 3_554, 2, 46, 1, 18.46, 30.07)),
        "r8" => Some(row("R8", 7_674, 5_485, 2_189, 8, 291, 4, 41.25, 2.60)),
        "r52" => Some(row("R52", 9_100, 6_532, 2_568, 52, 301, 4, 44.02, 2.64)),
        "ohsumed" => Some(row(
            "ohsumed", 7_400, 3_357, 4_043, 23, 197, 11, 79.49, 8.46,
        )),
        _ => None,
    }
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

impl StatsReport {
    /// Compares against a reference; real-valued cells at two decimals.
    pub fn mismatches(&self, reference: &StatsReport) -> Vec<StatsMismatch> {
        let mut out = Vec::new();
        let mut check = |field, expected: String, actual: String| {
            if expected != actual {
                out.push(StatsMismatch {
                    field,
                    expected,
                    actual,
                });
            }
        };
        check("docs", reference.docs.to_string(), self.docs.to_string());
        check(
            "training",
            reference.training.to_string(),
            self.training.to_string(),
        );
        check("test", reference.test.to_string(), self.test.to_string());
        check(
            "classes",
            reference.classes.to_string(),
            self.classes.to_string(),
        );
        check(
            "max_vocab",
            reference.max_vocab.to_string(),
            self.max_vocab.to_string(),
        );
        check(
            "min_vocab",
            reference.min_vocab.to_string(),
            self.min_vocab.to_string(),
        );
        check(
            "avg_vocab",
            format!("{:.2}", round2(reference.avg_vocab)),
            format!("{:.2}", round2(self.avg_vocab)),
        );
        check(
            "prop_new_words",
            format!("{:.2}", round2(reference.prop_new_words)),
            format!("{:.2}", round2(self.prop_new_words)),
        );
        out
    }
}
