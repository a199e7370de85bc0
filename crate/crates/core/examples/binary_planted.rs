//! Two classes drawn from disjoint planted dictionaries: reconstructive
//! against adversarial training, scored by minimum-residual classification.
//!
//! cargo run --release --example binary_planted

use std::time::Instant;

use adl::classifier::{classify, Model};
use adl::features::FeatureConfig;
use adl::synthetic::{planted_problem, PlantedSpec};
use adl::trainer::{train, Algorithm, TrainConfig};
use adl::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn accuracy(model: &Model, test: &[Mat]) -> adl::Result<f64> {
    let (mut hits, mut total) = (0, 0);
    for (c, block) in test.iter().enumerate() {
        for y in block.columns() {
            hits += usize::from(classify(model, y)? == c);
            total += 1;
        }
    }
    Ok(100.0 * hits as f64 / total as f64)
}

fn main() -> adl::Result<()> {
    let spec = PlantedSpec {
        classes: 2,
        dim: 64,
        atoms: 16,
        sparsity: 2,
        train_per_class: 200,
        test_per_class: 100,
        snr_db: Some(20.0),
    };
    let problem = planted_problem(&mut ChaCha8Rng::seed_from_u64(7), &spec);
    let labels = vec!["a".to_string(), "b".to_string()];

    for (algorithm, rho) in [
        (Algorithm::Reconstructive, 0.0),
        (Algorithm::AdversarialMinibatch, 1e-3),
    ] {
        let cfg = TrainConfig {
            atoms: 32,
            sparsity: 2,
            rho,
            max_outer_iters: 20,
            algorithm,
            seed: 1,
            ..TrainConfig::default()
        };
        let start = Instant::now();
        let training = train(&problem.train, &cfg)?;
        let model = Model::from_training(&labels, training, &cfg, FeatureConfig::default(), None)?;
        println!(
            "{algorithm:>5} rho={rho:<6} accuracy {:6.2}%  ({:.2?})",
            accuracy(&model, &problem.test)?,
            start.elapsed()
        );
    }
    Ok(())
}
