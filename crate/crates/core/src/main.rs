use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use texting::corpus::{Corpus, EmbeddingTable, Split};
use texting::experiments::{
    self, configure_threads, AttentionReduce, ChannelChoice, ExperimentConfig, ExperimentKind,
    SweepParam,
};
use texting::model::load_checkpoint;
use texting::training::{evaluate, Channel};
use texting::{Error, Result};

#[derive(Parser)]
#[command(
    name = "texting",
    version,
    about = "Graph-based inductive text classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dataset statistics, optionally checked against the reference table.
    Stats {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        verify: bool,
    },
    /// Train once per seed and report mean test accuracy.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Score a saved checkpoint on the test split.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Low-resource training on a stratified subsample; without a size, the
    /// default fraction grid is swept.
    Inductive {
        #[command(flatten)]
        common: Common,
        #[arg(long, conflicts_with = "docs_per_class")]
        fraction: Option<f64>,
        #[arg(long)]
        docs_per_class: Option<usize>,
        /// Comma-separated fractions for the curve.
        #[arg(long, value_delimiter = ',')]
        fractions: Option<Vec<f64>>,
    },
    /// Accuracy over a range of step counts or window sizes.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        param: SweepParam,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<usize>,
    },
    /// Per-word attention weights as CSV and HTML.
    Attention {
        #[command(flatten)]
        common: Common,
        /// Use a trained checkpoint instead of training one.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        max_over_dims: bool,
        /// Export only the first N test documents.
        #[arg(long)]
        docs: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Word vector file; random vectors when absent.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    embedding_dim: Option<usize>,
    #[arg(long)]
    channel: Option<ChannelChoice>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Skip checkpoint writing.
    #[arg(long)]
    no_checkpoints: bool,
}

impl Common {
    fn config(&self, kind: ExperimentKind) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::from_json_file(path)?,
            None => ExperimentConfig::default(),
        };
        c.kind = kind;
        if let Some(v) = &self.dataset {
            c.dataset = v.clone();
        }
        if let Some(v) = &self.data_dir {
            c.data_dir = v.clone();
        }
        if let Some(v) = self.seed {
            c.seeds = vec![v];
        }
        if let Some(v) = &self.seeds {
            c.seeds = v.clone();
        }
        if let Some(v) = &self.embeddings {
            c.embeddings = Some(v.clone());
        }
        if let Some(v) = self.embedding_dim {
            c.embedding_dim = v;
        }
        if let Some(v) = self.channel {
            c.channel = v;
        }
        let h = &mut c.hyper;
        if let Some(v) = self.steps {
            h.steps = v;
        }
        if let Some(v) = self.window {
            h.window = v;
        }
        if let Some(v) = self.hidden {
            h.hidden = v;
        }
        if let Some(v) = self.max_epochs {
            h.max_epochs = v;
        }
        if let Some(v) = self.batch_size {
            h.batch_size = v;
        }
        if self.no_checkpoints {
            c.checkpoints = false;
        }
        Ok(c)
    }
}

fn prepare(config: &mut ExperimentConfig) -> Result<(Corpus, EmbeddingTable)> {
    let corpus = config.load_corpus()?;
    let embeddings = config.load_embeddings(&corpus)?;
    Ok((corpus, embeddings))
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}

fn write_config(config: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::Io {
        path: out_dir.into(),
        source: e,
    })?;
    let path = out_dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(config)? + "\n")
        .map_err(|e| Error::Io { path, source: e })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Stats { common, verify } => {
            let mut config = common.config(ExperimentKind::Stats)?;
            config.verify |= verify;
            let corpus = config.load_corpus()?;
            let report = experiments::run_stats(&corpus, config.verify, Some(&common.out_dir))?;
            print_json(&report)
        }
        Command::Train { common } => {
            let mut config = common.config(ExperimentKind::Full)?;
            let (corpus, emb) = prepare(&mut config)?;
            write_config(&config, &common.out_dir)?;
            let result = experiments::run_full(&corpus, &emb, &config, &common.out_dir)?;
            print_json(&serde_json::json!({
                "dataset": result.dataset,
                "channel": result.channel,
                "mean": result.mean,
                "std": result.std,
                "seeds": config.seeds,
            }))
        }
        Command::Eval { common, checkpoint } => {
            let mut config = common.config(ExperimentKind::Full)?;
            let ckpt = load_checkpoint(&checkpoint)?;
            config.oov_seed = ckpt.oov_seed;
            config.embedding_dim = ckpt.hyper.input_dim;
            let (corpus, emb) = prepare(&mut config)?;
            if corpus.classes != ckpt.classes {
                return Err(Error::Checkpoint(format!(
                    "classes {:?} do not match the dataset's {:?}",
                    ckpt.classes, corpus.classes
                )));
            }
            let sets =
                texting::training::prepare_graphs(&corpus, &emb, &ckpt.hyper, Channel::Local)?;
            let acc = evaluate(&ckpt.params, &sets.test, &ckpt.hyper)?;
            print_json(&serde_json::json!({
                "dataset": corpus.name,
                "test_docs": corpus.count(Split::Test),
                "test_acc": acc,
            }))
        }
        Command::Inductive {
            common,
            fraction,
            docs_per_class,
            fractions,
        } => {
            let mut config = common.config(ExperimentKind::Inductive)?;
            config.fraction = fraction.or(config.fraction);
            config.docs_per_class = docs_per_class.or(config.docs_per_class);
            config.fractions = fractions.or(config.fractions);
            let (corpus, emb) = prepare(&mut config)?;
            write_config(&config, &common.out_dir)?;
            if config.fraction.is_none() && config.docs_per_class.is_none() {
                let runs =
                    experiments::run_inductive_curve(&corpus, &emb, &config, &common.out_dir)?;
                print_json(&runs)
            } else {
                let result = experiments::run_inductive(&corpus, &emb, &config, &common.out_dir)?;
                print_json(&result)
            }
        }
        Command::Sweep {
            common,
            param,
            values,
        } => {
            let mut config = common.config(ExperimentKind::Sweep)?;
            config.sweep_param = Some(param);
            config.sweep_values = values;
            let (corpus, emb) = prepare(&mut config)?;
            write_config(&config, &common.out_dir)?;
            let result = experiments::run_sweep(&corpus, &emb, &config, &common.out_dir)?;
            print_json(&result.points)
        }
        Command::Attention {
            common,
            checkpoint,
            max_over_dims,
            docs,
        } => {
            let mut config = common.config(ExperimentKind::Attention)?;
            if max_over_dims {
                config.attention_reduce = AttentionReduce::Max;
            }
            config.attention_docs = docs.or(config.attention_docs);
            let ckpt = checkpoint.as_deref().map(load_checkpoint).transpose()?;
            if let Some(c) = &ckpt {
                config.oov_seed = c.oov_seed;
                config.embedding_dim = c.hyper.input_dim;
            }
            let (corpus, emb) = prepare(&mut config)?;
            let trained = ckpt.as_ref().map(|c| (&c.params, &c.hyper));
            experiments::run_attention(&corpus, &emb, &config, trained, &common.out_dir)?;
            print_json(&serde_json::json!({
                "csv": common.out_dir.join("attention.csv"),
                "html": common.out_dir.join("attention.html"),
            }))
        }
    }
}

fn main() -> ExitCode {
    let threads = std::env::var("TEXTING_THREADS")
        .ok()
        .and_then(|v| v.parse().ok());
    configure_threads(threads);
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::json!({"error": e.kind(), "message": e.to_string()})
            );
            ExitCode::from(2)
        }
    }
}
