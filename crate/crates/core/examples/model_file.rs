//! Model file layout: write a model, inspect its header, verify that a
//! reload is bit-exact and that corruption is caught.
//!
//! cargo run --example model_file

use adl::classifier::{ClassDictionary, Model, Provenance};
use adl::cli::model_file::{decode_model, encode_model, MODEL_MAGIC};
use adl::features::FeatureConfig;
use adl::synthetic::random_dictionary;
use adl::trainer::TrainConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> adl::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cfg = TrainConfig { atoms: 8, ..TrainConfig::default() };
    let classes = ["speech", "music"]
        .iter()
        .map(|l| ClassDictionary { label: l.to_string(), dictionary: random_dictionary(&mut rng, 30, 8) })
        .collect();
    let model = Model::new(classes, FeatureConfig::default(), cfg.sparsity, cfg.rho, Provenance::from_config(&cfg, Some(22050)))?;

    let bytes = encode_model(&model);
    let header_len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    assert_eq!(&bytes[..4], MODEL_MAGIC);
    println!("{} bytes: 8 preamble + {header_len} header + {} payload + 4 checksum", bytes.len(), 2 * 30 * 8 * 8);
    println!("{}", String::from_utf8_lossy(&bytes[8..8 + header_len]));

    let back = decode_model(&bytes)?;
    assert_eq!(encode_model(&back), bytes);
    println!("reload is byte-identical");

    let mut corrupt = bytes.clone();
    let last_payload = corrupt.len() - 5;
    corrupt[last_payload] ^= 1;
    match decode_model(&corrupt) {
        Err(e) => println!("corrupted copy rejected: {e}"),
        Ok(_) => println!("corruption went unnoticed"),
    }
    Ok(())
}
