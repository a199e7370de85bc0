//! Per-class objective trajectories of both adversarial schedules on four
//! planted classes, written as CSV for plotting.
//!
//! cargo run --release --example multiclass_convergence > trajectories.csv

use adl::synthetic::{planted_problem, PlantedSpec};
use adl::trainer::{train, Algorithm, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> adl::Result<()> {
    let spec = PlantedSpec {
        classes: 4,
        dim: 64,
        atoms: 16,
        sparsity: 2,
        train_per_class: 200,
        test_per_class: 0,
        snr_db: Some(20.0),
    };
    let problem = planted_problem(&mut ChaCha8Rng::seed_from_u64(11), &spec);
    println!("algorithm,class,iteration,objective,reinitialized");
    for algorithm in [Algorithm::AdversarialBatch, Algorithm::AdversarialMinibatch] {
        let cfg = TrainConfig {
            atoms: 32,
            rho: 1e-3,
            max_outer_iters: 30,
            conv_tol: 1e-6,
            algorithm,
            ..TrainConfig::default()
        };
        let out = train(&problem.train, &cfg)?;
        for r in &out.report.records {
            println!("{algorithm},{},{},{:.10e},{}", r.class, r.iteration, r.objective, r.reinitialized);
        }
        eprintln!("{algorithm}: {} records in {:.2?}", out.report.records.len(), out.report.wall_time);
    }
    Ok(())
}
