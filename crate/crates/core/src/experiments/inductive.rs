use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{create_dir, mean_std, run_seed, write_file, write_json, ExperimentConfig, RunOutput};
use crate::corpus::{Corpus, EmbeddingTable, Split};
use crate::error::{Error, Result};
use crate::model::HyperParams;

/// Default x-axis of the low-resource curve. Only its endpoints are fixed by
/// convention; the interior points are a choice.
pub const FRACTION_GRID: [f64; 6] = [0.005, 0.01, 0.05, 0.1, 0.5, 1.0];

/// How many training documents to keep from each class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subsample {
    DocsPerClass(usize),
    /// `round(fraction · class size)` per class.
    Fraction(f64),
}

/// Stratified, seeded subsample of the training pool.
///
/// Kept training documents and all test documents retain their corpus
/// order; the vocabulary is rebuilt from the kept training documents, so
/// words seen only in dropped documents become out-of-vocabulary.
pub fn subsample(corpus: &Corpus, how: Subsample, seed: u64) -> Result<Corpus> {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); corpus.num_classes()];
    for (i, d) in corpus.documents.iter().enumerate() {
        if d.split.is_training() {
            by_class[d.label].push(i);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![false; corpus.documents.len()];
    for (class, members) in by_class.iter_mut().enumerate() {
        let k = match how {
            Subsample::DocsPerClass(n) => {
                if n > members.len() {
                    return Err(Error::Config(format!(
                        "class {:?} has {} training documents, {n} requested",
                        corpus.classes[class],
                        members.len()
                    )));
                }
                n
            }
            Subsample::Fraction(f) => (f * members.len() as f64).round() as usize,
        };
        if k == 0 {
            return Err(Error::EmptyClass(corpus.classes[class].clone()));
        }
        members.shuffle(&mut rng);
        for &i in &members[..k] {
            keep[i] = true;
        }
    }
    let documents = corpus
        .documents
        .iter()
        .zip(&keep)
        .filter(|(d, k)| **k || d.split == Split::Test)
        .map(|(d, _)| {
            let mut d = d.clone();
            if d.split == Split::Val {
                d.split = Split::Train;
            }
            d
        })
        .collect();
    Ok(Corpus::new(
        corpus.name.clone(),
        documents,
        corpus.classes.clone(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InductiveRun {
    pub seed: u64,
    pub subsample: Subsample,
    pub train_docs: usize,
    /// Word types in the sampled training documents.
    pub words_in_training: usize,
    /// Word types of the whole corpus absent from the sampled training documents.
    pub new_words: usize,
    /// Word types of the test documents absent from the sampled training documents.
    pub new_test_words: usize,
    pub test_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InductiveResult {
    pub dataset: String,
    pub mean: f64,
    pub std: f64,
    pub runs: Vec<InductiveRun>,
}

fn one_run(
    corpus: &Corpus,
    all_words: &HashSet<String>,
    embeddings: &EmbeddingTable,
    config: &ExperimentConfig,
    how: Subsample,
    seed: u64,
    output: Option<&RunOutput>,
) -> Result<InductiveRun> {
    let sampled = subsample(corpus, how, seed)?;
    let vocab = sampled.vocabulary();
    let test_words: HashSet<&str> = sampled
        .split(Split::Test)
        .flat_map(|d| d.tokens.iter().map(String::as_str))
        .collect();
    let hyper = HyperParams {
        seed,
        ..config.hyper.clone()
    };
    let run = run_seed(
        &sampled,
        embeddings,
        &hyper,
        config.channel,
        config.vote,
        output,
    )?;
    Ok(InductiveRun {
        seed,
        subsample: how,
        train_docs: sampled
            .documents
            .iter()
            .filter(|d| d.split.is_training())
            .count(),
        words_in_training: vocab.len(),
        new_words: all_words.iter().filter(|w| !vocab.contains(w)).count(),
        new_test_words: test_words.iter().filter(|w| !vocab.contains(w)).count(),
        test_acc: run.test_acc,
    })
}

fn write_runs_csv(w: &mut dyn Write, runs: &[InductiveRun]) -> std::io::Result<()> {
    writeln!(
        w,
        "subsample,amount,seed,train_docs,words_in_training,new_words,new_test_words,test_acc"
    )?;
    for r in runs {
        let (kind, amount) = match r.subsample {
            Subsample::DocsPerClass(n) => ("docs_per_class", n.to_string()),
            Subsample::Fraction(f) => ("fraction", f.to_string()),
        };
        writeln!(
            w,
            "{kind},{amount},{},{},{},{},{},{}",
            r.seed, r.train_docs, r.words_in_training, r.new_words, r.new_test_words, r.test_acc
        )?;
    }
    Ok(())
}

/// Low-resource training at one subsample size, once per seed.
///
/// Uses `docs_per_class` when set, otherwise `fraction`.
pub fn run_inductive(
    corpus: &Corpus,
    embeddings: &EmbeddingTable,
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<InductiveResult> {
    config.validate()?;
    let how = match (config.docs_per_class, config.fraction) {
        (Some(n), _) => Subsample::DocsPerClass(n),
        (None, Some(f)) => Subsample::Fraction(f),
        (None, None) => {
            return Err(Error::Config(
                "inductive run needs docs_per_class or fraction".into(),
            ))
        }
    };
    create_dir(out_dir)?;
    let all_words = corpus.all_words();
    let runs: Vec<InductiveRun> = config
        .seeds
        .par_iter()
        .map(|&seed| {
            let output = RunOutput {
                dir: out_dir,
                tag: format!("seed{seed}"),
                checkpoints: config.checkpoints,
            };
            one_run(
                corpus,
                &all_words,
                embeddings,
                config,
                how,
                seed,
                Some(&output),
            )
        })
        .collect::<Result<_>>()?;
    let (mean, std) = mean_std(&runs.iter().map(|r| r.test_acc).collect::<Vec<_>>());
    let result = InductiveResult {
        dataset: corpus.name.clone(),
        mean,
        std,
        runs,
    };
    write_json(&out_dir.join("inductive.json"), &result)?;
    write_file(&out_dir.join("inductive.csv"), |w| {
        write_runs_csv(w, &result.runs)
    })?;
    Ok(result)
}

#[derive(Serialize)]
struct CurveMeta<'a> {
    dataset: &'a str,
    fractions: &'a [f64],
    /// Marks the interior grid points as a choice rather than a convention.
    grid_is_default_choice: bool,
    mean_by_fraction: Vec<(f64, f64, f64)>,
}

/// Test accuracy over a grid of training fractions, one row per
/// `(fraction, seed)` in `inductive_curve.csv`.
pub fn run_inductive_curve(
    corpus: &Corpus,
    embeddings: &EmbeddingTable,
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<Vec<InductiveRun>> {
    config.validate()?;
    create_dir(out_dir)?;
    let fractions = config
        .fractions
        .clone()
        .unwrap_or_else(|| FRACTION_GRID.to_vec());
    let all_words = corpus.all_words();
    let jobs: Vec<(f64, u64)> = fractions
        .iter()
        .flat_map(|&f| config.seeds.iter().map(move |&s| (f, s)))
        .collect();
    let runs: Vec<InductiveRun> = jobs
        .par_iter()
        .map(|&(f, seed)| {
            one_run(
                corpus,
                &all_words,
                embeddings,
                config,
                Subsample::Fraction(f),
                seed,
                None,
            )
        })
        .collect::<Result<_>>()?;
    let mean_by_fraction = fractions
        .iter()
        .map(|&f| {
            let accs: Vec<f64> = runs
                .iter()
                .filter(|r| r.subsample == Subsample::Fraction(f))
                .map(|r| r.test_acc)
                .collect();
            let (m, s) = mean_std(&accs);
            (f, m, s)
        })
        .collect();
    write_file(&out_dir.join("inductive_curve.csv"), |w| {
        write_runs_csv(w, &runs)
    })?;
    write_json(
        &out_dir.join("inductive_curve.json"),
        &CurveMeta {
            dataset: &corpus.name,
            fractions: &fractions,
            grid_is_default_choice: config.fractions.is_none(),
            mean_by_fraction,
        },
    )?;
    Ok(runs)
}
