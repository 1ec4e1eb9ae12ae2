mod common;

use std::collections::BTreeSet;

use common::window_pairs_oracle;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use texting::corpus::{Corpus, Document, EmbeddingTable, Split};
use texting::graphs::{build_global_pmi_graph, build_graph, WindowCounts};

fn edge_words(tokens: &[String], window: usize) -> BTreeSet<(String, String)> {
    let g = build_graph(tokens, window, &EmbeddingTable::random(2, 0)).unwrap();
    g.edges()
        .into_iter()
        .map(|(i, j, w)| {
            assert_eq!(w, 1.0);
            let (a, b) = (g.node_words[i].clone(), g.node_words[j].clone());
            if a < b {
                (a, b)
            } else {
                (b, a)
            }
        })
        .collect()
}

fn random_tokens(rng: &mut ChaCha8Rng) -> Vec<String> {
    let alphabet = rng.gen_range(1..=20);
    let len = rng.gen_range(1..=60);
    (0..len)
        .map(|_| format!("w{}", rng.gen_range(0..alphabet)))
        .collect()
}

#[test]
fn thousand_random_sequences_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..1000 {
        let tokens = random_tokens(&mut rng);
        for window in 2..=6 {
            assert_eq!(
                edge_words(&tokens, window),
                window_pairs_oracle(&tokens, window),
                "case {case}, window {window}: {tokens:?}"
            );
        }
    }
}

fn tokens_strategy() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(0u8..12, 1..40)
        .prop_map(|v| v.into_iter().map(|i| format!("t{i}")).collect())
}

proptest! {
    #[test]
    fn adjacency_symmetric_binary_no_self_loops(tokens in tokens_strategy(), window in 2usize..8) {
        let g = build_graph(&tokens, window, &EmbeddingTable::random(3, 1)).unwrap();
        let n = g.num_nodes();
        for i in 0..n {
            prop_assert_eq!(g.adjacency[[i, i]], 0.0);
            for j in 0..n {
                prop_assert_eq!(g.adjacency[[i, j]], g.adjacency[[j, i]]);
                prop_assert!(g.adjacency[[i, j]] == 0.0 || g.adjacency[[i, j]] == 1.0);
            }
        }
        let unique: BTreeSet<_> = tokens.iter().collect();
        prop_assert_eq!(n, unique.len());
    }

    #[test]
    fn edges_grow_with_window(tokens in tokens_strategy(), window in 2usize..8) {
        let small = edge_words(&tokens, window);
        let large = edge_words(&tokens, window + 1);
        prop_assert!(small.is_subset(&large));
        let e = EmbeddingTable::random(3, 1);
        let d0 = build_graph(&tokens, window, &e).unwrap().density();
        let d1 = build_graph(&tokens, window + 1, &e).unwrap().density();
        prop_assert!(d0 <= d1);
    }

    #[test]
    fn construction_is_deterministic(tokens in tokens_strategy(), window in 2usize..8) {
        let e = EmbeddingTable::random(4, 9);
        prop_assert_eq!(build_graph(&tokens, window, &e).unwrap(), build_graph(&tokens, window, &e).unwrap());
    }

    #[test]
    fn window_count_bounds(docs in prop::collection::vec(tokens_strategy(), 1..6), window in 2usize..6) {
        let documents: Vec<Document> = docs
            .into_iter()
            .enumerate()
            .map(|(i, tokens)| Document { id: i.to_string(), tokens, label: 0, split: Split::Train })
            .collect();
        let counts = WindowCounts::count(&documents, window);
        for ((a, b), c) in &counts.pair {
            prop_assert!(*c <= counts.word[a].min(counts.word[b]));
        }
        for c in counts.word.values() {
            prop_assert!(*c <= counts.total_windows);
        }
        let corpus = Corpus::new("p", documents, vec!["x".into()]);
        let global = build_global_pmi_graph(&corpus, window).unwrap();
        for w in global.sorted_edges().values() {
            prop_assert!(*w > 0.0);
        }
    }
}
