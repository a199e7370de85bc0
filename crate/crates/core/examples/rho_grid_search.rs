//! Cross-validated choice of rho on a generated corpus whose classes share
//! part of their spectrum.
//!
//! cargo run --release --example rho_grid_search

use adl::cli::commands::{cmd_gridsearch, DEFAULT_RHO_GRID};
use adl::features::FeatureConfig;
use adl::synthetic::{write_tone_corpus, ToneClass};
use adl::trainer::TrainConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> adl::Result<()> {
    let root = std::env::temp_dir().join("adl_rho_grid");
    let _ = std::fs::remove_dir_all(&root);
    // both classes contain 440 Hz; only the second partial tells them apart
    let classes = [
        ToneClass { label: "a".into(), frequencies_hz: vec![440.0, 700.0] },
        ToneClass { label: "b".into(), frequencies_hz: vec![440.0, 760.0] },
    ];
    write_tone_corpus(&mut ChaCha8Rng::seed_from_u64(8), &root, &classes, 10, 8000, 1.0, 0.3)?;
    let features = FeatureConfig { fft_size: 256, hop: 128, window_frames: 10, shift: 2, ..FeatureConfig::default() };
    let cfg = TrainConfig { atoms: 16, max_outer_iters: 8, ..TrainConfig::default() };
    cmd_gridsearch(&root, 5, &DEFAULT_RHO_GRID, &cfg, &features, None, &mut std::io::stdout())?;
    Ok(())
}
