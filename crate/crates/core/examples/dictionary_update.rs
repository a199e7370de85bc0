//! One adversarial dictionary update with codes fixed: operands, the
//! convexifying shift and the surrogate before and after each sweep.
//!
//! cargo run --release --example dictionary_update

use adl::dict_update::{bcd_update, build_operands_binary, objective_value_binary, surrogate_value, CodedSamples};
use adl::sparse_coding::batch_encode;
use adl::synthetic::{random_dictionary, sparse_mixtures};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> adl::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let own_truth = random_dictionary(&mut rng, 20, 10);
    let off_truth = random_dictionary(&mut rng, 20, 10);
    let own = sparse_mixtures(&mut rng, &own_truth, 2, 150, Some(20.0));
    let off = sparse_mixtures(&mut rng, &off_truth, 2, 150, Some(20.0));
    let rho = 0.05;

    let mut dict = random_dictionary(&mut rng, 20, 12);
    for sweep in 0..5 {
        let own_codes = batch_encode(&dict, &own, 2)?;
        let off_codes = batch_encode(&dict, &off, 2)?;
        let own_b = CodedSamples::new(&own, &own_codes);
        let off_b = CodedSamples::new(&off, &off_codes);
        let ops = build_operands_binary(own_b, off_b, rho)?;
        let before = surrogate_value(&dict, &ops)?;
        let out = bcd_update(&dict, &ops, 1)?;
        let after = surrogate_value(&out.dictionary, &ops)?;
        dict = out.dictionary;
        println!(
            "pass {sweep}: lambda_min {:+.4}, surrogate {before:.5} -> {after:.5}, objective {:.5}, flagged {:?}",
            ops.lambda_min,
            objective_value_binary(&dict, own_b, off_b, rho)?,
            out.flagged
        );
    }
    Ok(())
}
