//! Experiment drivers behind the command-line tool.
//!
//! Every driver takes a loaded corpus and an embedding table, writes its
//! artifacts under an output directory and returns the summary it wrote.
//! Outputs depend only on the configuration and seeds.

mod attention;
mod inductive;
mod sweep;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    corpus_stats, load_corpus, reference_stats, split_train_val, Corpus, EmbeddingTable,
    LoadOptions, StatsReport,
};
use crate::error::{Error, Result};
use crate::model::forward_internals::softmax;
use crate::model::{save_checkpoint, Checkpoint, HyperParams, ModelParams};
use crate::training::{
    argmax_rows, predict_graphs, prepare_graphs, train_on_graphs, vote_multichannel,
    write_metrics_csv, Channel, EpochRecord, ImproveHook, TrainReport, Vote,
};

pub use attention::{
    attention_weights, export_attention, normalize_weights, run_attention, AttentionReduce,
};
pub use inductive::{
    run_inductive, run_inductive_curve, subsample, InductiveResult, InductiveRun, Subsample,
    FRACTION_GRID,
};
pub use sweep::{mean_density, run_sweep, SweepParam, SweepPoint, SweepResult, SweepRun};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    #[default]
    Full,
    Inductive,
    Sweep,
    Attention,
    Stats,
}

/// Which channels to train; `Multi` trains both and combines them by vote.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelChoice {
    #[default]
    Local,
    Global,
    Multi,
}

impl std::str::FromStr for ChannelChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "local" => Ok(ChannelChoice::Local),
            "global" => Ok(ChannelChoice::Global),
            "multi" => Ok(ChannelChoice::Multi),
            _ => Err(Error::Config(format!("unknown channel {s:?}"))),
        }
    }
}

/// A complete, serializable description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: String,
    pub data_dir: PathBuf,
    /// Whitespace-separated word vectors; random vectors when absent.
    pub embeddings: Option<PathBuf>,
    pub embedding_dim: usize,
    pub oov_seed: u64,
    /// `None` uses the per-dataset default.
    pub remove_stopwords: Option<bool>,
    pub hyper: HyperParams,
    pub seeds: Vec<u64>,
    pub kind: ExperimentKind,
    pub channel: ChannelChoice,
    pub vote: Vote,
    /// Write a checkpoint whenever validation improves.
    pub checkpoints: bool,
    pub docs_per_class: Option<usize>,
    pub fraction: Option<f64>,
    /// Fractions for the low-resource curve; `None` with neither
    /// `docs_per_class` nor `fraction` set means [`FRACTION_GRID`].
    pub fractions: Option<Vec<f64>>,
    pub sweep_param: Option<SweepParam>,
    pub sweep_values: Vec<usize>,
    pub attention_reduce: AttentionReduce,
    /// Only the first this-many test documents are exported.
    pub attention_docs: Option<usize>,
    pub verify: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: "mr".into(),
            data_dir: PathBuf::from("data"),
            embeddings: None,
            embedding_dim: 300,
            oov_seed: 0,
            remove_stopwords: None,
            hyper: HyperParams::default(),
            seeds: vec![0],
            kind: ExperimentKind::Full,
            channel: ChannelChoice::Local,
            vote: Vote::Average,
            checkpoints: true,
            docs_per_class: None,
            fraction: None,
            fractions: None,
            sweep_param: None,
            sweep_values: Vec::new(),
            attention_reduce: AttentionReduce::Mean,
            attention_docs: None,
            verify: false,
        }
    }
}

fn strictly_increasing<T: PartialOrd>(v: &[T]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.seeds.is_empty() {
            return bad("seeds list is empty");
        }
        if self.embedding_dim == 0 {
            return bad("embedding_dim must be positive");
        }
        if let Some(f) = self.fraction {
            if !(f > 0.0 && f <= 1.0) {
                return bad("fraction must lie in (0, 1]");
            }
        }
        if let Some(fs) = &self.fractions {
            if fs.is_empty()
                || !strictly_increasing(fs)
                || fs.iter().any(|f| !(*f > 0.0 && *f <= 1.0))
            {
                return bad("fractions must be non-empty, strictly increasing and in (0, 1]");
            }
        }
        if self.docs_per_class == Some(0) {
            return bad("docs_per_class must be positive");
        }
        if self.kind == ExperimentKind::Sweep {
            let Some(param) = self.sweep_param else {
                return bad("sweep needs a parameter");
            };
            if self.sweep_values.is_empty() || !strictly_increasing(&self.sweep_values) {
                return bad("sweep values must be non-empty and strictly increasing");
            }
            let min = match param {
                SweepParam::Steps => 1,
                SweepParam::Window => 2,
            };
            if self.sweep_values[0] < min {
                return bad("sweep value below the parameter's minimum");
            }
        }
        self.hyper.validate()
    }

    pub fn load_corpus(&self) -> Result<Corpus> {
        let opts = LoadOptions {
            remove_stopwords: self.remove_stopwords,
            stopwords: None,
        };
        load_corpus(&self.data_dir, &self.dataset, &opts)
    }

    /// Loads (or synthesizes) embeddings and fixes `hyper.input_dim` to match.
    pub fn load_embeddings(&mut self, corpus: &Corpus) -> Result<EmbeddingTable> {
        let table = match &self.embeddings {
            Some(path) => EmbeddingTable::load(
                path,
                self.embedding_dim,
                self.oov_seed,
                Some(&corpus.all_words()),
            )?,
            None => EmbeddingTable::random(self.embedding_dim, self.oov_seed),
        };
        self.hyper.input_dim = table.dimension();
        Ok(table)
    }
}

/// Outcome of one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub test_acc: f64,
    /// One report per trained channel, in `local, global` order.
    pub reports: Vec<(Channel, TrainReport)>,
}

/// Mean and spread of test accuracy over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullResult {
    pub dataset: String,
    pub channel: ChannelChoice,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single seed.
    pub std: f64,
    pub runs: Vec<SeedRun>,
}

/// `(mean, sample std)`; the spread of one value is 0.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

fn channels(choice: ChannelChoice) -> &'static [Channel] {
    match choice {
        ChannelChoice::Local => &[Channel::Local],
        ChannelChoice::Global => &[Channel::Global],
        ChannelChoice::Multi => &[Channel::Local, Channel::Global],
    }
}

pub(crate) fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub(crate) fn write_file(
    path: &Path,
    write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    write_file(path, |w| writeln!(w, "{text}"))
}

/// Where a seed's checkpoints and metrics go; `None` writes nothing.
#[derive(Debug, Clone)]
pub struct RunOutput<'a> {
    pub dir: &'a Path,
    pub tag: String,
    pub checkpoints: bool,
}

/// Splits off validation, trains each requested channel and scores the
/// test set, voting when two channels are trained.
pub fn run_seed(
    corpus: &Corpus,
    embeddings: &EmbeddingTable,
    hyper: &HyperParams,
    choice: ChannelChoice,
    vote: Vote,
    output: Option<&RunOutput>,
) -> Result<SeedRun> {
    let split = split_train_val(corpus, hyper.train_ratio, hyper.seed)?;
    let mut reports = Vec::new();
    let mut probabilities: Vec<Array2<f32>> = Vec::new();
    let mut test_labels = Vec::new();
    for &channel in channels(choice) {
        let sets = prepare_graphs(&split, embeddings, hyper, channel)?;
        if sets.test.is_empty() {
            return Err(Error::EmptySet("test"));
        }
        let ckpt_dir = output.map(|o| o.dir.join(format!("checkpoint_{}_{channel}", o.tag)));
        let mut save = |record: &EpochRecord, params: &ModelParams<f32>| -> Result<()> {
            if let Some(dir) = &ckpt_dir {
                save_checkpoint(
                    dir,
                    &Checkpoint {
                        hyper: hyper.clone(),
                        classes: corpus.classes.clone(),
                        oov_seed: embeddings.oov_seed(),
                        epoch: Some(record.epoch),
                        params: params.clone(),
                    },
                )?;
            }
            Ok(())
        };
        let on_improve: Option<ImproveHook<'_>> = match output {
            Some(o) if o.checkpoints => Some(&mut save),
            _ => None,
        };
        let (params, report) = train_on_graphs(&sets, corpus.num_classes(), hyper, on_improve)?;
        if let Some(o) = output {
            let path = o.dir.join(format!("metrics_{}_{channel}.csv", o.tag));
            write_file(&path, |w| write_metrics_csv(w, &report))?;
        }
        probabilities.push(softmax(&predict_graphs(&params, &sets.test, hyper)?));
        test_labels = sets.test.iter().map(|g| g.label).collect();
        reports.push((channel, report));
    }
    let predicted = match probabilities.as_slice() {
        [p] => argmax_rows(p),
        [local, global] => vote_multichannel(local, global, vote)?,
        _ => unreachable!("one or two channels"),
    };
    let hits = predicted
        .iter()
        .zip(&test_labels)
        .filter(|(p, y)| p == y)
        .count();
    Ok(SeedRun {
        seed: hyper.seed,
        test_acc: hits as f64 / test_labels.len() as f64,
        reports,
    })
}

/// One training run per seed; writes `full.json` and `full.csv`.
pub fn run_full(
    corpus: &Corpus,
    embeddings: &EmbeddingTable,
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<FullResult> {
    config.validate()?;
    create_dir(out_dir)?;
    let runs: Vec<SeedRun> = config
        .seeds
        .par_iter()
        .map(|&seed| {
            let hyper = HyperParams {
                seed,
                ..config.hyper.clone()
            };
            let output = RunOutput {
                dir: out_dir,
                tag: format!("seed{seed}"),
                checkpoints: config.checkpoints,
            };
            run_seed(
                corpus,
                embeddings,
                &hyper,
                config.channel,
                config.vote,
                Some(&output),
            )
        })
        .collect::<Result<_>>()?;
    let accs: Vec<f64> = runs.iter().map(|r| r.test_acc).collect();
    let (mean, std) = mean_std(&accs);
    let result = FullResult {
        dataset: corpus.name.clone(),
        channel: config.channel,
        mean,
        std,
        runs,
    };
    write_json(&out_dir.join("full.json"), &result)?;
    write_file(&out_dir.join("full.csv"), |w| {
        writeln!(w, "seed,test_acc,best_epoch,epochs")?;
        for r in &result.runs {
            let (_, first) = &r.reports[0];
            writeln!(
                w,
                "{},{},{},{}",
                r.seed,
                r.test_acc,
                first.best_epoch,
                first.epochs.len()
            )?;
        }
        Ok(())
    })?;
    Ok(result)
}

/// Computes dataset statistics, writes `stats.json` and, with `verify`,
/// fails on any cell that differs from the reference table.
pub fn run_stats(corpus: &Corpus, verify: bool, out_dir: Option<&Path>) -> Result<StatsReport> {
    let report = corpus_stats(corpus);
    if let Some(dir) = out_dir {
        create_dir(dir)?;
        write_json(&dir.join("stats.json"), &report)?;
    }
    if verify {
        let reference = reference_stats(&corpus.name)
            .ok_or_else(|| Error::NoReferenceStats(corpus.name.clone()))?;
        let diffs = report.mismatches(&reference);
        if !diffs.is_empty() {
            let cells = diffs
                .iter()
                .map(|m| format!("{} expected {} got {}", m.field, m.expected, m.actual))
                .collect::<Vec<_>>()
                .join("; ");
            return Err(Error::StatsMismatch {
                dataset: corpus.name.clone(),
                cells,
            });
        }
    }
    Ok(report)
}

/// Caps the global worker pool; later calls are ignored.
pub fn configure_threads(threads: Option<usize>) {
    if let Some(n) = threads.filter(|n| *n > 0) {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}
