//! Benchmark corpora: loading, cleaning, train/val carve-out and statistics.
//!
//! A dataset `<name>` lives in two aligned files inside a data directory:
//! `<name>.meta` with one `<id>\t<split>\t<label>` line per document, and
//! `<name>.texts` whose line `i` is the raw text of metadata line `i`.

mod embeddings;
mod stats;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use embeddings::EmbeddingTable;
pub use stats::{corpus_stats, reference_stats, StatsMismatch, StatsReport};

const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    /// Train and validation documents together form the labelled training pool.
    pub fn is_training(self) -> bool {
        matches!(self, Split::Train | Split::Val)
    }
}

impl FromStr for Split {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            _ => Err(()),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub tokens: Vec<String>,
    pub label: usize,
    pub split: Split,
}

impl Document {
    /// Distinct tokens in first-occurrence order.
    pub fn unique_words(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.tokens
            .iter()
            .map(String::as_str)
            .filter(|w| seen.insert(*w))
            .collect()
    }
}

/// Ordered word list with a reverse index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn from_documents<'a>(docs: impl IntoIterator<Item = &'a Document>) -> Self {
        let mut vocab = Vocabulary::default();
        for doc in docs {
            for tok in &doc.tokens {
                if !vocab.index.contains_key(tok) {
                    vocab.index.insert(tok.clone(), vocab.words.len());
                    vocab.words.push(tok.clone());
                }
            }
        }
        vocab
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub name: String,
    pub documents: Vec<Document>,
    pub classes: Vec<String>,
    vocabulary: Vocabulary,
}

impl Corpus {
    /// Builds a corpus and derives its vocabulary from the training pool.
    pub fn new(name: impl Into<String>, documents: Vec<Document>, classes: Vec<String>) -> Self {
        let vocabulary =
            Vocabulary::from_documents(documents.iter().filter(|d| d.split.is_training()));
        Corpus {
            name: name.into(),
            documents,
            classes,
            vocabulary,
        }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &Document> {
        self.documents.iter().filter(move |d| d.split == split)
    }

    pub fn count(&self, split: Split) -> usize {
        self.split(split).count()
    }

    /// Every distinct token in the corpus, across all splits.
    pub fn all_words(&self) -> HashSet<String> {
        self.documents
            .iter()
            .flat_map(|d| d.tokens.iter().cloned())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopWords(HashSet<String>);

impl StopWords {
    pub fn parse(text: &str) -> Self {
        StopWords(
            text.lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty())
                .collect(),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }
}

impl Default for StopWords {
    fn default() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }
}

/// Lowercases, splits on whitespace and optionally drops stopwords.
pub fn clean_and_tokenize(raw: &str, stopwords: Option<&StopWords>) -> Vec<String> {
    raw.split_whitespace()
        .map(str::to_lowercase)
        .filter(|t| stopwords.is_none_or(|s| !s.contains(t)))
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// `None` applies the per-dataset default (off for MR, on otherwise).
    pub remove_stopwords: Option<bool>,
    pub stopwords: Option<StopWords>,
}

pub fn default_remove_stopwords(dataset: &str) -> bool {
    !dataset.eq_ignore_ascii_case("mr")
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(|l| l.trim_end_matches('\r').to_string())
        .collect())
}

pub fn load_corpus(data_dir: &Path, dataset: &str, opts: &LoadOptions) -> Result<Corpus> {
    let meta = read_lines(&data_dir.join(format!("{dataset}.meta")))?;
    let texts = read_lines(&data_dir.join(format!("{dataset}.texts")))?;
    if meta.len() != texts.len() {
        return Err(Error::LineCountMismatch {
            meta_lines: meta.len(),
            text_lines: texts.len(),
        });
    }

    let remove = opts
        .remove_stopwords
        .unwrap_or_else(|| default_remove_stopwords(dataset));
    let default_stop;
    let stopwords = match (&opts.stopwords, remove) {
        (_, false) => None,
        (Some(s), true) => Some(s),
        (None, true) => {
            default_stop = StopWords::default();
            Some(&default_stop)
        }
    };

    let mut raw = Vec::with_capacity(meta.len());
    for (i, line) in meta.iter().enumerate() {
        let lineno = i + 1;
        let mut fields = line.split('\t');
        let (Some(id), Some(split), Some(label)) = (fields.next(), fields.next(), fields.next())
        else {
            return Err(Error::MalformedMeta {
                line: lineno,
                reason: "expected <id>\\t<split>\\t<label>".into(),
            });
        };
        let split: Split = split.trim().parse().map_err(|_| Error::UnknownSplit {
            line: lineno,
            token: split.to_string(),
        })?;
        let tokens = clean_and_tokenize(&texts[i], stopwords);
        if tokens.is_empty() {
            return Err(Error::EmptyDocument {
                line: lineno,
                id: id.to_string(),
            });
        }
        raw.push((id.to_string(), split, label.trim().to_string(), tokens));
    }

    let classes: Vec<String> = raw
        .iter()
        .map(|r| r.2.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let class_index: HashMap<&str, usize> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();

    let documents = raw
        .iter()
        .map(|(id, split, label, tokens)| Document {
            id: id.clone(),
            tokens: tokens.clone(),
            label: class_index[label.as_str()],
            split: *split,
        })
        .collect();
    Ok(Corpus::new(dataset, documents, classes))
}

/// Carves a validation set out of the training pool with a seeded shuffle.
///
/// `ratio` is the fraction of the pool that stays in training; the
/// validation size is `round((1 - ratio) * pool)`.
pub fn split_train_val(corpus: &Corpus, ratio: f64, seed: u64) -> Result<Corpus> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::BadRatio(ratio));
    }
    let mut pool: Vec<usize> = corpus
        .documents
        .iter()
        .enumerate()
        .filter(|(_, d)| d.split.is_training())
        .map(|(i, _)| i)
        .collect();
    let n_val = ((1.0 - ratio) * pool.len() as f64).round() as usize;
    if n_val == 0 {
        return Err(Error::EmptyValidation {
            ratio,
            train: pool.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pool.shuffle(&mut rng);
    let n_train = pool.len() - n_val;

    let mut documents = corpus.documents.clone();
    for (rank, &i) in pool.iter().enumerate() {
        documents[i].split = if rank < n_train {
            Split::Train
        } else {
            Split::Val
        };
    }
    Ok(Corpus {
        name: corpus.name.clone(),
        documents,
        classes: corpus.classes.clone(),
        vocabulary: corpus.vocabulary.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_dataset(dir: &Path, name: &str, meta: &str, texts: &str) {
        std::fs::write(dir.join(format!("{name}.meta")), meta).unwrap();
        std::fs::write(dir.join(format!("{name}.texts")), texts).unwrap();
    }

    fn doc(id: &str, tokens: &[&str], label: usize, split: Split) -> Document {
        Document {
            id: id.into(),
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
            label,
            split,
        }
    }

    #[test]
    fn tokenize_drops_stopwords() {
        let stop = StopWords::default();
        assert!(stop.contains("the") && stop.contains("was"));
        assert_eq!(
            clean_and_tokenize("The movie was GOOD", Some(&stop)),
            vec!["movie", "good"]
        );
        assert_eq!(clean_and_tokenize("good", Some(&stop)), vec!["good"]);
        assert_eq!(clean_and_tokenize("a b a", None), vec!["a", "b", "a"]);
        assert!(clean_and_tokenize("the a", Some(&stop)).is_empty());
    }

    #[test]
    fn load_single_line() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), "tiny", "d0\ttrain\tpos\n", "good\n");
        let c = load_corpus(dir.path(), "tiny", &LoadOptions::default()).unwrap();
        assert_eq!(c.documents.len(), 1);
        assert_eq!(c.documents[0].tokens, vec!["good"]);
        assert_eq!(c.classes, vec!["pos"]);
    }

    #[test]
    fn load_errors_are_distinct() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path();
        assert!(matches!(
            load_corpus(p, "none", &LoadOptions::default()),
            Err(Error::MissingFile(_))
        ));

        write_dataset(p, "mismatch", "a\ttrain\tx\nb\ttest\tx\n", "one\n");
        assert!(matches!(
            load_corpus(p, "mismatch", &LoadOptions::default()),
            Err(Error::LineCountMismatch {
                meta_lines: 2,
                text_lines: 1
            })
        ));

        write_dataset(p, "badsplit", "a\tdev\tx\n", "one\n");
        assert!(matches!(
            load_corpus(p, "badsplit", &LoadOptions::default()),
            Err(Error::UnknownSplit { line: 1, .. })
        ));

        write_dataset(p, "empty", "a\ttrain\tx\nb\ttrain\tx\n", "word\nthe of\n");
        match load_corpus(p, "empty", &LoadOptions::default()) {
            Err(Error::EmptyDocument { line, id }) => {
                assert_eq!(line, 2);
                assert_eq!(id, "b");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn labels_sorted_and_vocab_excludes_test() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(
            dir.path(),
            "mr",
            "0\ttrain\tpos\n1\ttest\tneg\n2\ttrain\tneg\n",
            "great fun\nawful plot\ndull fun\n",
        );
        let c = load_corpus(dir.path(), "mr", &LoadOptions::default()).unwrap();
        assert_eq!(c.classes, vec!["neg", "pos"]);
        assert_eq!(c.documents[0].label, 1);
        assert_eq!(c.documents[1].label, 0);
        assert!(c.vocabulary().contains("dull"));
        assert!(!c.vocabulary().contains("awful"));
        assert!(!c.vocabulary().contains("plot"));
    }

    #[test]
    fn mr_keeps_stopwords_by_default() {
        assert!(!default_remove_stopwords("mr"));
        assert!(!default_remove_stopwords("MR"));
        assert!(default_remove_stopwords("R8"));
    }

    #[test]
    fn split_ten_docs() {
        let docs = (0..10)
            .map(|i| doc(&i.to_string(), &["w"], 0, Split::Train))
            .chain(std::iter::once(doc("t", &["w"], 0, Split::Test)))
            .collect();
        let c = Corpus::new("toy", docs, vec!["a".into()]);
        let s = split_train_val(&c, 0.9, 7).unwrap();
        assert_eq!(s.count(Split::Train), 9);
        assert_eq!(s.count(Split::Val), 1);
        assert_eq!(s.count(Split::Test), 1);
        assert_eq!(s, split_train_val(&c, 0.9, 7).unwrap());
    }

    #[test]
    fn split_mr_sized_pool() {
        let docs = (0..7108)
            .map(|i| doc(&i.to_string(), &["w"], 0, Split::Train))
            .collect();
        let c = Corpus::new("mr", docs, vec!["a".into()]);
        let s = split_train_val(&c, 0.9, 1).unwrap();
        assert_eq!(s.count(Split::Train), 6397);
        assert_eq!(s.count(Split::Val), 711);
    }

    #[test]
    fn split_rejects_empty_val_and_bad_ratio() {
        let c = Corpus::new(
            "x",
            vec![doc("0", &["w"], 0, Split::Train)],
            vec!["a".into()],
        );
        assert!(matches!(
            split_train_val(&c, 0.9, 0),
            Err(Error::EmptyValidation { .. })
        ));
        assert!(matches!(
            split_train_val(&c, 1.0, 0),
            Err(Error::BadRatio(_))
        ));
        assert!(matches!(
            split_train_val(&c, 0.0, 0),
            Err(Error::BadRatio(_))
        ));
    }
}
