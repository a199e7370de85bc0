//! Held-out accuracy as a function of the number of atoms per class,
//! printed as two-column CSV.
//!
//! cargo run --release --example atom_sweep

use adl::cli::commands::cmd_sweep_atoms;
use adl::features::FeatureConfig;
use adl::synthetic::{write_tone_corpus, ToneClass};
use adl::trainer::TrainConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> adl::Result<()> {
    let root = std::env::temp_dir().join("adl_atom_sweep");
    let _ = std::fs::remove_dir_all(&root);
    let classes = [
        ToneClass { label: "low".into(), frequencies_hz: vec![200.0, 410.0] },
        ToneClass { label: "mid".into(), frequencies_hz: vec![800.0, 1010.0] },
        ToneClass { label: "high".into(), frequencies_hz: vec![1900.0, 2450.0] },
    ];
    write_tone_corpus(&mut ChaCha8Rng::seed_from_u64(9), &root, &classes, 10, 8000, 1.0, 0.5)?;
    let features = FeatureConfig { fft_size: 256, hop: 128, window_frames: 10, shift: 2, ..FeatureConfig::default() };
    let cfg = TrainConfig { max_outer_iters: 8, ..TrainConfig::default() };
    cmd_sweep_atoms(&root, &[4, 8, 16, 32, 64, 128], 5, &cfg, &features, None, &mut std::io::stdout())?;
    Ok(())
}
