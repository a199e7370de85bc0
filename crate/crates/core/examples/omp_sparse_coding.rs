//! Orthogonal matching pursuit on a random dictionary, compared with the
//! exhaustive search over all supports.
//!
//! cargo run --release --example omp_sparse_coding

use adl::sparse_coding::{batch_encode, exhaustive_encode, omp_encode_traced, STOP_TOL};
use adl::synthetic::{random_dictionary, sparse_mixtures};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> adl::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let dict = random_dictionary(&mut rng, 16, 24);
    let y = sparse_mixtures(&mut rng, &dict, 3, 5, Some(30.0));

    for (n, col) in y.columns().enumerate() {
        let traced = omp_encode_traced(&dict, col, 3, STOP_TOL)?;
        let best = exhaustive_encode(&dict, col, 3)?;
        println!(
            "signal {n}: omp support {:?} residual {:.4e} | exhaustive {:?} residual {:.4e}",
            traced.code.indices(),
            dict.residual_sq(col, &traced.code),
            best.support_sorted(),
            dict.residual_sq(col, &best),
        );
        println!("  residual norm per step: {:?}", traced.residual_norms);
    }

    let codes = batch_encode(&dict, &y, 3)?;
    println!("batch coded {} signals over {} atoms", codes.len(), codes.atoms());
    Ok(())
}
