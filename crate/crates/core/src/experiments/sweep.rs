use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{create_dir, mean_std, run_seed, write_file, write_json, ExperimentConfig};
use crate::corpus::{Corpus, EmbeddingTable};
use crate::error::{Error, Result};
use crate::graphs::document_graph;
use crate::model::HyperParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Steps,
    Window,
}

impl std::str::FromStr for SweepParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "steps" => Ok(SweepParam::Steps),
            "window" => Ok(SweepParam::Window),
            _ => Err(Error::Config(format!(
                "cannot sweep {s:?}; expected steps or window"
            ))),
        }
    }
}

impl std::fmt::Display for SweepParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SweepParam::Steps => "steps",
            SweepParam::Window => "window",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub value: usize,
    pub seed: u64,
    pub test_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: usize,
    pub mean_acc: f64,
    pub std: f64,
    /// Mean local-graph density over all documents (window sweeps only).
    pub density: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub parameter: SweepParam,
    pub points: Vec<SweepPoint>,
    pub runs: Vec<SweepRun>,
}

impl SweepResult {
    /// Value with the highest mean accuracy; ties go to the smaller value.
    pub fn best_value(&self) -> Option<usize> {
        let mut best: Option<&SweepPoint> = None;
        for p in &self.points {
            if best.is_none_or(|b| p.mean_acc > b.mean_acc) {
                best = Some(p);
            }
        }
        best.map(|p| p.value)
    }
}

/// Mean of `2|E| / (|V|(|V|-1))` over every document's local graph.
pub fn mean_density(corpus: &Corpus, window: usize, embeddings: &EmbeddingTable) -> Result<f64> {
    let densities: Vec<f64> = corpus
        .documents
        .par_iter()
        .map(|d| Ok(document_graph(d, window, embeddings)?.density()))
        .collect::<Result<_>>()?;
    Ok(densities.iter().sum::<f64>() / densities.len().max(1) as f64)
}

/// Trains once per `(value, seed)`; writes `sweep.csv` (one row per run),
/// `sweep_summary.csv` and `sweep.json`.
pub fn run_sweep(
    corpus: &Corpus,
    embeddings: &EmbeddingTable,
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<SweepResult> {
    let config = ExperimentConfig {
        kind: super::ExperimentKind::Sweep,
        ..config.clone()
    };
    config.validate()?;
    let parameter = config.sweep_param.expect("validated");
    create_dir(out_dir)?;
    let jobs: Vec<(usize, u64)> = config
        .sweep_values
        .iter()
        .flat_map(|&v| config.seeds.iter().map(move |&s| (v, s)))
        .collect();
    let runs: Vec<SweepRun> = jobs
        .par_iter()
        .map(|&(value, seed)| {
            let mut hyper = HyperParams {
                seed,
                ..config.hyper.clone()
            };
            match parameter {
                SweepParam::Steps => hyper.steps = value,
                SweepParam::Window => hyper.window = value,
            }
            let run = run_seed(
                corpus,
                embeddings,
                &hyper,
                config.channel,
                config.vote,
                None,
            )?;
            Ok(SweepRun {
                value,
                seed,
                test_acc: run.test_acc,
            })
        })
        .collect::<Result<_>>()?;
    let points = config
        .sweep_values
        .iter()
        .map(|&value| {
            let accs: Vec<f64> = runs
                .iter()
                .filter(|r| r.value == value)
                .map(|r| r.test_acc)
                .collect();
            let (mean_acc, std) = mean_std(&accs);
            let density = match parameter {
                SweepParam::Window => Some(mean_density(corpus, value, embeddings)?),
                SweepParam::Steps => None,
            };
            Ok(SweepPoint {
                value,
                mean_acc,
                std,
                density,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let result = SweepResult {
        parameter,
        points,
        runs,
    };
    let density_of = |value: usize| {
        result
            .points
            .iter()
            .find(|p| p.value == value)
            .and_then(|p| p.density)
            .map(|d| d.to_string())
            .unwrap_or_default()
    };
    write_file(&out_dir.join("sweep.csv"), |w| {
        writeln!(w, "parameter,value,seed,test_acc,density")?;
        for r in &result.runs {
            writeln!(
                w,
                "{parameter},{},{},{},{}",
                r.value,
                r.seed,
                r.test_acc,
                density_of(r.value)
            )?;
        }
        Ok(())
    })?;
    write_file(&out_dir.join("sweep_summary.csv"), |w| {
        writeln!(w, "parameter,value,mean_acc,std,density")?;
        for p in &result.points {
            writeln!(
                w,
                "{parameter},{},{},{},{}",
                p.value,
                p.mean_acc,
                p.std,
                density_of(p.value)
            )?;
        }
        Ok(())
    })?;
    write_json(&out_dir.join("sweep.json"), &result)?;
    Ok(result)
}
