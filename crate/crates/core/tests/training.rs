//! Behavior of the training schedules on planted and random data.

use adl::dict_update::Dictionary;
use adl::error::AdlError;
use adl::linalg::{norm, Mat};
use adl::sparse_coding::batch_encode;
use adl::synthetic::{orthogonal_classes, random_dictionary, sparse_mixtures};
use adl::trainer::{
    init_dictionary, train, train_binary, train_multiclass_alg1, train_multiclass_alg2,
    train_reconstructive, Algorithm, TrainConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Mean squared residual of `y` coded over `dict`.
fn mean_residual(dict: &Dictionary, y: &Mat, sparsity: usize) -> f64 {
    let codes = batch_encode(dict, y, sparsity).unwrap();
    let total: f64 = y
        .columns()
        .zip(codes.iter())
        .map(|(col, c)| dict.residual_sq(col, c))
        .sum();
    total / y.cols() as f64
}

/// Noiseless 2-sparse samples, each class confined to its own 2-dimensional
/// subspace of R^32, mutually orthogonal.
fn orthogonal_data(seed: u64, classes: usize, n: usize) -> Vec<Mat> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dicts = orthogonal_classes(&mut rng, classes, 32, 2).unwrap();
    dicts
        .iter()
        .map(|d| sparse_mixtures(&mut rng, d, 2, n, None))
        .collect()
}

fn random_classes(seed: u64, classes: usize) -> Vec<Mat> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..classes)
        .map(|c| {
            let d = random_dictionary(&mut rng, 12, 8);
            sparse_mixtures(&mut rng, &d, 2, 25 + 5 * c, Some(15.0))
        })
        .collect()
}

fn cfg(algorithm: Algorithm, rho: f64) -> TrainConfig {
    TrainConfig {
        atoms: 10,
        sparsity: 2,
        rho,
        max_outer_iters: 8,
        conv_tol: 0.0,
        seed: 5,
        algorithm,
        ..TrainConfig::default()
    }
}

fn assert_same(a: &[Dictionary], b: &[Dictionary]) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert_eq!(x.atoms(), y.atoms());
    }
}

fn exact_cfg(algorithm: Algorithm) -> TrainConfig {
    TrainConfig {
        atoms: 4,
        sparsity: 2,
        rho: 1e-3,
        max_outer_iters: 30,
        seed: 9,
        algorithm,
        ..TrainConfig::default()
    }
}

fn check_exact(data: &[Mat], dicts: &[Dictionary], what: &str) {
    for (c, d) in dicts.iter().enumerate() {
        let own = mean_residual(d, &data[c], 2);
        assert!(own <= 1e-6, "{what}: class {c} own residual {own}");
        for (j, y) in data.iter().enumerate() {
            if j != c {
                let cross = mean_residual(d, y, 2);
                assert!(cross > own, "{what}: class {c} on {j}: {cross} vs {own}");
            }
        }
    }
}

#[test]
fn binary_orthogonal_classes_are_learned_exactly() {
    for seed in 0..5 {
        let data = orthogonal_data(seed, 2, 60);
        let out = train_binary(&data[0], &data[1], &exact_cfg(Algorithm::AdversarialBatch)).unwrap();
        check_exact(&data, &out.dictionaries, "binary");
    }
}

#[test]
fn four_orthogonal_classes_are_learned_exactly() {
    let data = orthogonal_data(3, 4, 60);
    let a1 = train_multiclass_alg1(&data, &exact_cfg(Algorithm::AdversarialBatch)).unwrap();
    check_exact(&data, &a1.dictionaries, "batch");
    let a2 = train_multiclass_alg2(&data, &exact_cfg(Algorithm::AdversarialMinibatch)).unwrap();
    check_exact(&data, &a2.dictionaries, "minibatch");
}

#[test]
fn two_class_schedules_coincide() {
    let data = random_classes(1, 2);
    let binary = train_binary(&data[0], &data[1], &cfg(Algorithm::AdversarialBatch, 0.05)).unwrap();
    let alg1 = train_multiclass_alg1(&data, &cfg(Algorithm::AdversarialBatch, 0.05)).unwrap();
    let alg2 = train_multiclass_alg2(&data, &cfg(Algorithm::AdversarialMinibatch, 0.05)).unwrap();
    assert_same(&binary.dictionaries, &alg1.dictionaries);
    assert_same(&binary.dictionaries, &alg2.dictionaries);
    assert_eq!(binary.report.records, alg2.report.records);
}

#[test]
fn rho_zero_reduces_to_reconstructive() {
    let data = random_classes(2, 3);
    let recon = train_reconstructive(&data, &cfg(Algorithm::Reconstructive, 0.0)).unwrap();
    let alg1 = train_multiclass_alg1(&data, &cfg(Algorithm::AdversarialBatch, 0.0)).unwrap();
    assert_same(&recon.dictionaries, &alg1.dictionaries);
    // the minibatch schedule performs one update per off-class, i.e. C - 1
    // sweeps of the same reconstructive operands
    let alg2 = train_multiclass_alg2(&data, &cfg(Algorithm::AdversarialMinibatch, 0.0)).unwrap();
    let matched = TrainConfig {
        sweeps: 2,
        ..cfg(Algorithm::Reconstructive, 0.0)
    };
    let recon2 = train_reconstructive(&data, &matched).unwrap();
    assert_same(&recon2.dictionaries, &alg2.dictionaries);
}

#[test]
fn rho_zero_ignores_other_classes() {
    let mut data = random_classes(3, 3);
    let before = train_multiclass_alg1(&data, &cfg(Algorithm::AdversarialBatch, 0.0)).unwrap();
    data[2] = random_classes(99, 3).remove(2);
    let after = train_multiclass_alg1(&data, &cfg(Algorithm::AdversarialBatch, 0.0)).unwrap();
    assert_eq!(before.dictionaries[0].atoms(), after.dictionaries[0].atoms());
    assert_eq!(before.dictionaries[1].atoms(), after.dictionaries[1].atoms());
    assert_ne!(before.dictionaries[2].atoms(), after.dictionaries[2].atoms());
}

#[test]
fn adversarial_term_changes_the_result() {
    let data = random_classes(4, 3);
    let recon = train(&data, &cfg(Algorithm::Reconstructive, 0.0)).unwrap();
    let adv = train(&data, &cfg(Algorithm::AdversarialBatch, 0.1)).unwrap();
    assert_ne!(recon.dictionaries[0].atoms(), adv.dictionaries[0].atoms());
}

#[test]
fn zero_iterations_return_the_initialization() {
    let data = random_classes(5, 3);
    let c = TrainConfig {
        max_outer_iters: 0,
        ..cfg(Algorithm::AdversarialMinibatch, 0.01)
    };
    let out = train(&data, &c).unwrap();
    assert!(out.report.records.is_empty());
    for (i, d) in out.dictionaries.iter().enumerate() {
        let seed = c.seed ^ (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let init = init_dictionary(&data[i], c.atoms, seed).unwrap();
        assert_eq!(d.atoms(), init.atoms());
    }
}

#[test]
fn report_has_one_record_per_class_and_iteration() {
    let data = random_classes(6, 3);
    let c = cfg(Algorithm::AdversarialMinibatch, 0.01);
    let out = train(&data, &c).unwrap();
    for class in 0..3 {
        let recs: Vec<_> = out.report.records.iter().filter(|r| r.class == class).collect();
        // conv_tol = 0 only stops on an exactly repeated objective
        assert!(!recs.is_empty() && recs.len() <= c.max_outer_iters);
        for (n, r) in recs.iter().enumerate() {
            assert_eq!(r.iteration, n + 1);
            assert!(r.objective.is_finite());
        }
        assert_eq!(out.report.trajectory(class).len(), recs.len());
    }
    let labels: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
    let mut csv = Vec::new();
    out.report.write_delimited(&labels, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iteration,class,objective,reinitialized"));
    assert_eq!(lines.count(), out.report.records.len());
}

#[test]
fn atoms_stay_healthy_and_runs_repeat() {
    let data = random_classes(7, 4);
    for alg in [Algorithm::Reconstructive, Algorithm::AdversarialBatch, Algorithm::AdversarialMinibatch] {
        let c = cfg(alg, 0.05);
        let a = train(&data, &c).unwrap();
        let b = train(&data, &c).unwrap();
        assert_same(&a.dictionaries, &b.dictionaries);
        for d in &a.dictionaries {
            for j in 0..d.len() {
                assert!((norm(d.atom(j)) - 1.0).abs() <= 1e-9);
            }
        }
    }
}

#[test]
fn dead_atoms_are_replaced_from_worst_samples() {
    // more atoms than distinct directions: duplicates starve and get flagged
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let d = random_dictionary(&mut rng, 6, 2);
    let y = sparse_mixtures(&mut rng, &d, 1, 4, None);
    let data = vec![y.clone(), y];
    let c = TrainConfig {
        atoms: 6,
        sparsity: 1,
        rho: 0.0,
        max_outer_iters: 4,
        conv_tol: 0.0,
        seed: 1,
        algorithm: Algorithm::Reconstructive,
        ..TrainConfig::default()
    };
    let out = train(&data, &c).unwrap();
    let reinit: usize = out.report.records.iter().map(|r| r.reinitialized).sum();
    assert!(reinit > 0);
    for dict in &out.dictionaries {
        for j in 0..dict.len() {
            assert!((norm(dict.atom(j)) - 1.0).abs() <= 1e-9);
        }
    }
}

#[test]
fn bad_inputs_are_reported() {
    let data = random_classes(9, 2);
    let one = vec![data[0].clone()];
    assert!(matches!(train(&one, &cfg(Algorithm::AdversarialBatch, 0.1)), Err(AdlError::InvalidInput(_))));
    let empty = vec![data[0].clone(), Mat::zeros(12, 0)];
    let err = train(&empty, &cfg(Algorithm::AdversarialBatch, 0.1)).unwrap_err();
    assert!(err.to_string().contains("class 1"), "{err}");
    let bad = TrainConfig { sparsity: 10, ..cfg(Algorithm::AdversarialBatch, 0.1) };
    assert!(train(&data, &bad).is_err());
    let bad = TrainConfig { rho: 1.5, ..cfg(Algorithm::AdversarialBatch, 0.1) };
    assert!(train(&data, &bad).is_err());
}
