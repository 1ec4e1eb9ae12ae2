mod common;

use common::{pad_batch, random_instance, random_params, scalar_forward};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use texting::model::{forward_eval, HyperParams};

#[test]
fn vectorized_forward_matches_scalar_loops() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let d = rng.gen_range(2..6);
        let hyper = HyperParams {
            input_dim: d,
            hidden: rng.gen_range(2..7),
            steps: rng.gen_range(0..4),
            mlp_depth: rng.gen_range(1..3),
            dropout: 0.0,
            ..Default::default()
        };
        let classes = rng.gen_range(2..5);
        let count = rng.gen_range(1..4);
        let instances: Vec<_> = (0..count)
            .map(|_| {
                let n = rng.gen_range(1..7);
                random_instance(&mut rng, n, d, classes)
            })
            .collect();
        let params = random_params(&mut rng, &hyper, classes);
        // extra padding beyond the largest graph
        let batch = pad_batch(&instances, 8);
        let trace = forward_eval(&batch, &params, &hyper).unwrap();
        let mut loss_sum = 0.0;
        for (g, inst) in instances.iter().enumerate() {
            let (logits, loss) = scalar_forward(
                &inst.features,
                &inst.adjacency,
                &params,
                hyper.steps,
                inst.label,
            );
            for (c, l) in logits.iter().enumerate() {
                let diff = (trace.logits[[g, c]] - l).abs();
                worst = worst.max(diff);
                assert!(diff < 1e-10, "case {case} graph {g} class {c}: {diff:e}");
            }
            loss_sum += loss;
        }
        let diff = (trace.loss - loss_sum / count as f64).abs();
        assert!(diff < 1e-10, "case {case} loss: {diff:e}");
    }
    assert!(worst < 1e-10);
}

/// Projection disabled: node states start from the raw features.
#[test]
fn identity_input_matches_scalar_loops() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let hyper = HyperParams {
            input_dim: 4,
            hidden: 4,
            use_projection: false,
            steps: 2,
            dropout: 0.0,
            ..Default::default()
        };
        let inst = random_instance(&mut rng, 5, 4, 3);
        let params = random_params(&mut rng, &hyper, 3);
        assert!(params.input_proj.is_none());
        let trace =
            forward_eval(&pad_batch(std::slice::from_ref(&inst), 5), &params, &hyper).unwrap();
        let (logits, _) = scalar_forward(&inst.features, &inst.adjacency, &params, 2, inst.label);
        for (c, l) in logits.iter().enumerate() {
            assert!((trace.logits[[0, c]] - l).abs() < 1e-10);
        }
    }
}
