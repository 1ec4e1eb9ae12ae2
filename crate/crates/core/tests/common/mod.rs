#![allow(clippy::needless_range_loop)]

//! Independent reference implementations used by the integration tests.
//!
//! Nothing here calls into the library's numerical kernels: the oracles work
//! on plain `Vec`s with explicit loops so they can catch mistakes in the
//! vectorized code paths.

#![allow(dead_code)]

use std::collections::BTreeSet;

use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use texting::corpus::{Corpus, Document, Split};
use texting::graphs::GraphBatch;
use texting::model::{HyperParams, ModelParams};

/// All distinct unordered word pairs that share at least one window.
///
/// Enumerates every window explicitly; a sequence shorter than the window
/// is a single window.
pub fn window_pairs_oracle(tokens: &[String], window: usize) -> BTreeSet<(String, String)> {
    let mut spans: Vec<&[String]> = Vec::new();
    if tokens.len() <= window {
        spans.push(tokens);
    } else {
        for start in 0..=tokens.len() - window {
            spans.push(&tokens[start..start + window]);
        }
    }
    let mut pairs = BTreeSet::new();
    for span in spans {
        for a in span {
            for b in span {
                if a < b {
                    pairs.insert((a.clone(), b.clone()));
                }
            }
        }
    }
    pairs
}

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn at(m: &Array2<f64>, i: usize, j: usize) -> f64 {
    m[[i, j]]
}

/// Logits and cross-entropy for one unpadded graph, by explicit loops over
/// the gated update, the attention readout and the softmax layer.
pub fn scalar_forward(
    features: &[Vec<f64>],
    adjacency: &[Vec<f64>],
    p: &ModelParams<f64>,
    steps: usize,
    label: usize,
) -> (Vec<f64>, f64) {
    let n = features.len();
    let hd = p.hidden();

    let mut h: Vec<Vec<f64>> = match &p.input_proj {
        Some(proj) => (0..n)
            .map(|v| {
                (0..hd)
                    .map(|k| {
                        let mut s = proj.bias[k];
                        for (j, x) in features[v].iter().enumerate() {
                            s += x * at(&proj.weight, j, k);
                        }
                        s
                    })
                    .collect()
            })
            .collect(),
        None => features.to_vec(),
    };

    for _ in 0..steps {
        let mut agg = vec![vec![0.0; hd]; n];
        for v in 0..n {
            for u in 0..n {
                for j in 0..hd {
                    agg[v][j] += adjacency[v][u] * h[u][j];
                }
            }
        }
        let mut a = vec![vec![0.0; hd]; n];
        for v in 0..n {
            for k in 0..hd {
                for j in 0..hd {
                    a[v][k] += agg[v][j] * at(&p.w_a, j, k);
                }
            }
        }
        let mut next = vec![vec![0.0; hd]; n];
        for v in 0..n {
            let mut z = vec![0.0; hd];
            let mut r = vec![0.0; hd];
            for k in 0..hd {
                let mut sz = p.b_z[k];
                let mut sr = p.b_r[k];
                for j in 0..hd {
                    sz += a[v][j] * at(&p.w_z, j, k) + h[v][j] * at(&p.u_z, j, k);
                    sr += a[v][j] * at(&p.w_r, j, k) + h[v][j] * at(&p.u_r, j, k);
                }
                z[k] = sig(sz);
                r[k] = sig(sr);
            }
            for k in 0..hd {
                let mut sh = p.b_h[k];
                for j in 0..hd {
                    sh += a[v][j] * at(&p.w_h, j, k) + r[j] * h[v][j] * at(&p.u_h, j, k);
                }
                let cand = sh.tanh();
                next[v][k] = cand * z[k] + h[v][k] * (1.0 - z[k]);
            }
        }
        h = next;
    }

    let mlp = |layers: &[texting::model::Affine<f64>], x: &[f64]| -> Vec<f64> {
        let mut cur = x.to_vec();
        for (li, l) in layers.iter().enumerate() {
            let out_dim = l.bias.len();
            let mut out = vec![0.0; out_dim];
            for k in 0..out_dim {
                let mut s = l.bias[k];
                for (j, c) in cur.iter().enumerate() {
                    s += c * at(&l.weight, j, k);
                }
                out[k] = if li + 1 < layers.len() { s.tanh() } else { s };
            }
            cur = out;
        }
        cur
    };
    let node_out: Vec<Vec<f64>> = h
        .iter()
        .map(|hv| {
            let g = mlp(&p.f1.layers, hv);
            let e = mlp(&p.f2.layers, hv);
            (0..hd).map(|k| sig(g[k]) * e[k].tanh()).collect()
        })
        .collect();
    let pooled: Vec<f64> = (0..hd)
        .map(|k| {
            let mean = node_out.iter().map(|r| r[k]).sum::<f64>() / n as f64;
            let max = node_out
                .iter()
                .map(|r| r[k])
                .fold(f64::NEG_INFINITY, f64::max);
            mean + max
        })
        .collect();
    let classes = p.num_classes();
    let logits: Vec<f64> = (0..classes)
        .map(|c| {
            let mut s = p.classifier.bias[c];
            for k in 0..hd {
                s += pooled[k] * at(&p.classifier.weight, k, c);
            }
            s
        })
        .collect();
    let denom: f64 = logits.iter().map(|l| l.exp()).sum();
    let loss = -(logits[label].exp() / denom).ln();
    (logits, loss)
}

/// A small random graph instance: features `n × d`, symmetric adjacency.
pub struct Instance {
    pub features: Vec<Vec<f64>>,
    pub adjacency: Vec<Vec<f64>>,
    pub label: usize,
}

pub fn random_instance(rng: &mut ChaCha8Rng, n: usize, d: usize, classes: usize) -> Instance {
    let features = (0..n)
        .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let mut adjacency = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(0.6) {
                let w = rng.gen_range(0.2..1.0);
                adjacency[i][j] = w;
                adjacency[j][i] = w;
            }
        }
        if rng.gen_bool(0.5) {
            adjacency[i][i] = rng.gen_range(0.2..1.0);
        }
    }
    Instance {
        features,
        adjacency,
        label: rng.gen_range(0..classes),
    }
}

/// Pads instances into a batch of `max_nodes` (at least the largest graph).
pub fn pad_batch(instances: &[Instance], max_nodes: usize) -> GraphBatch<f64> {
    let b = instances.len();
    let n = instances
        .iter()
        .map(|i| i.features.len())
        .max()
        .unwrap()
        .max(max_nodes);
    let d = instances[0].features[0].len();
    let mut features = Array3::zeros((b, n, d));
    let mut adjacency = Array3::zeros((b, n, n));
    let mut mask = Array2::zeros((b, n));
    for (g, inst) in instances.iter().enumerate() {
        for (v, row) in inst.features.iter().enumerate() {
            mask[[g, v]] = 1.0;
            for (j, x) in row.iter().enumerate() {
                features[[g, v, j]] = *x;
            }
            for (u, w) in inst.adjacency[v].iter().enumerate() {
                adjacency[[g, v, u]] = *w;
            }
        }
    }
    let labels = instances.iter().map(|i| i.label).collect();
    GraphBatch::from_parts(features, adjacency, mask, labels).unwrap()
}

/// Random parameters with non-zero biases everywhere.
pub fn random_params(
    rng: &mut ChaCha8Rng,
    hyper: &HyperParams,
    classes: usize,
) -> ModelParams<f64> {
    let mut p: ModelParams<f64> = ModelParams::init(
        &HyperParams {
            seed: rng.gen(),
            ..hyper.clone()
        },
        classes,
    );
    for (name, mut t) in p.tensors_mut() {
        if name.contains("bias") || name.starts_with("b_") {
            t.mapv_inplace(|_| rng.gen_range(-0.5..0.5));
        } else {
            t.mapv_inplace(|v| v * 1.5);
        }
    }
    p
}

/// Central-difference gradient of `loss` with respect to every element.
pub fn finite_difference(
    params: &ModelParams<f64>,
    step: f64,
    loss: impl Fn(&ModelParams<f64>) -> f64,
) -> Vec<(String, Vec<f64>)> {
    let mut probe = params.clone();
    let names: Vec<(String, usize)> = params
        .tensors()
        .iter()
        .map(|(n, t)| (n.clone(), t.len()))
        .collect();
    let mut out = Vec::new();
    for (ti, (name, len)) in names.into_iter().enumerate() {
        let mut grads = Vec::with_capacity(len);
        for e in 0..len {
            let orig = nth(&mut probe, ti, e, None);
            nth(&mut probe, ti, e, Some(orig + step));
            let up = loss(&probe);
            nth(&mut probe, ti, e, Some(orig - step));
            let down = loss(&probe);
            nth(&mut probe, ti, e, Some(orig));
            grads.push((up - down) / (2.0 * step));
        }
        out.push((name, grads));
    }
    out
}

fn nth(p: &mut ModelParams<f64>, tensor: usize, elem: usize, set: Option<f64>) -> f64 {
    let mut tensors = p.tensors_mut();
    let slot = tensors[tensor].1.iter_mut().nth(elem).unwrap();
    let old = *slot;
    if let Some(v) = set {
        *slot = v;
    }
    old
}

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Two-class corpus where every document carries one class keyword.
pub fn separable_corpus(docs_per_class: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let filler = [
        "the", "film", "plot", "actor", "scene", "story", "music", "time",
    ];
    let keys = [["awful", "boring", "dull"], ["great", "superb", "moving"]];
    let mut documents = Vec::new();
    for i in 0..docs_per_class * 2 {
        let label = i % 2;
        let len = rng.gen_range(4..9);
        let mut tokens: Vec<String> = (0..len)
            .map(|_| filler[rng.gen_range(0..filler.len())].to_string())
            .collect();
        let pos = rng.gen_range(0..=tokens.len());
        tokens.insert(pos, keys[label][rng.gen_range(0..3)].to_string());
        documents.push(Document {
            id: format!("d{i}"),
            tokens,
            label,
            split: Split::Train,
        });
    }
    Corpus::new("toy", documents, vec!["neg".into(), "pos".into()])
}

/// Writes `<name>.meta` / `<name>.texts` for a two-class corpus: the first
/// `train_per_class` documents of each class are training, the rest test.
pub fn write_synthetic_dataset(
    dir: &std::path::Path,
    name: &str,
    train_per_class: usize,
    test_per_class: usize,
    seed: u64,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let filler = [
        "the", "film", "plot", "actor", "scene", "story", "music", "time", "cast",
    ];
    let keys = [["awful", "boring", "dull"], ["great", "superb", "moving"]];
    let mut meta = String::new();
    let mut texts = String::new();
    let per_class = train_per_class + test_per_class;
    for i in 0..per_class * 2 {
        let label = i % 2;
        let split = if i / 2 < train_per_class {
            "train"
        } else {
            "test"
        };
        let len = rng.gen_range(4..10);
        let mut tokens: Vec<&str> = (0..len)
            .map(|_| filler[rng.gen_range(0..filler.len())])
            .collect();
        let pos = rng.gen_range(0..=tokens.len());
        tokens.insert(pos, keys[label][rng.gen_range(0..3)]);
        meta.push_str(&format!("doc{i}\t{split}\t{}\n", ["neg", "pos"][label]));
        texts.push_str(&tokens.join(" "));
        texts.push('\n');
    }
    std::fs::write(dir.join(format!("{name}.meta")), meta).unwrap();
    std::fs::write(dir.join(format!("{name}.texts")), texts).unwrap();
}
